//! Square-root (CIR) variance with an independent Brownian price driver:
//!
//! ```text
//! dX_t = b dt + sqrt(V_t) dW_t
//! dV_t = kappa (theta - V_t) dt + sigma_v sqrt(V_t) dB_t
//! ```

use super::{check_nonnegative, check_positive, integrate_path, standard_normal, SamplePath};
use crate::error::{config_err, Result};
use crate::grid::SamplingGrid;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirSpec {
    /// Mean reversion per day.
    pub kappa: f64,
    /// Long-run variance.
    pub theta: f64,
    /// Volatility of variance.
    pub sigma_v: f64,
    /// Price drift per day.
    pub drift_x: f64,
}

impl Default for CirSpec {
    /// Monthly-horizon calibration: `kappa = 0.03`, `theta = 1`, `sigma_v = 0.2`.
    fn default() -> Self {
        Self {
            kappa: 0.03,
            theta: 1.0,
            sigma_v: 0.2,
            drift_x: 0.0,
        }
    }
}

impl CirSpec {
    pub fn validate(&self) -> Result<()> {
        check_nonnegative("model.kappa", self.kappa)?;
        check_positive("model.theta", self.theta)?;
        check_nonnegative("model.sigma_v", self.sigma_v)?;
        if !self.drift_x.is_finite() {
            return Err(config_err("model.drift_x must be finite"));
        }
        Ok(())
    }

    /// `2·kappa·theta >= sigma_v²`.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma_v * self.sigma_v
    }

    /// Shape and scale of the Gamma invariant law. `None` when the process
    /// has no nondegenerate stationary distribution.
    pub fn invariant_gamma(&self) -> Option<(f64, f64)> {
        if self.kappa > 0.0 && self.sigma_v > 0.0 {
            let s2 = self.sigma_v * self.sigma_v;
            Some((2.0 * self.kappa * self.theta / s2, s2 / (2.0 * self.kappa)))
        } else {
            None
        }
    }
}

pub fn simulate_cir(spec: &CirSpec, v0: f64, grid: &SamplingGrid, seed: u64) -> Result<SamplePath> {
    let mut rng = rng_from_seed(seed);
    let mut path = simulate_cir_with(spec, v0, grid, || {
        let zx = standard_normal(&mut rng);
        let zv = standard_normal(&mut rng);
        (zx, zv)
    })?;
    path.seed = Some(seed);
    Ok(path)
}

/// CIR simulation driven by caller-supplied standard normal pairs
/// `(z_price, z_variance)`, one pair per fine step.
///
/// The linear drift is integrated exactly over each fine step and the
/// diffusion term uses the positive part of the current state (full
/// truncation), so the scheme reduces to the exact ODE solution when
/// `sigma_v = 0`.
pub fn simulate_cir_with<F>(spec: &CirSpec, v0: f64, grid: &SamplingGrid, mut normals: F) -> Result<SamplePath>
where
    F: FnMut() -> (f64, f64),
{
    spec.validate()?;
    check_positive("initial variance", v0)?;
    let h = grid.fine_step();
    let sqrt_h = h.sqrt();
    let decay = (-spec.kappa * h).exp();
    // the reported variance is the positive part that drives the price
    let (x_obs, v_fine) = integrate_path(grid, v0, |v| v.max(0.0), |_, v| {
        let (zx, zv) = normals();
        let vp = v.max(0.0);
        let sd = vp.sqrt();
        let dx = spec.drift_x * h + sd * sqrt_h * zx;
        let v_next = spec.theta + (vp - spec.theta) * decay + spec.sigma_v * sd * sqrt_h * zv;
        (dx, v_next)
    });
    Ok(SamplePath {
        grid: *grid,
        x_obs,
        v_fine,
        seed: None,
        price_jumps: 0,
    })
}
