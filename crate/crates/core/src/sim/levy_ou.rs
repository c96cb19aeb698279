//! Log-volatility driven by a Lévy Ornstein–Uhlenbeck state
//!
//! ```text
//! dY_t = -lambda Y_t dt + dL_t
//! ```
//!
//! where the stationary law of `Y` has Gaussian variance
//! `gauss_var_marginal` and Lévy density `A e^{-b x} x^{-1-p}` on `x > 0`,
//! centred (zero mean). The background driving Lévy process `L` is the one
//! matching that stationary law: unit-time Lévy density
//! `w(x) = -u(x) - x u'(x) = A e^{-b x} (p x^{-1-p} + b x^{-p})` and
//! Gaussian variance `2·gauss_var_marginal`, both scaled by `lambda` under
//! [`BdlpClock::Marginal`].
//!
//! Jumps smaller than `eps_cut` are replaced by their mean, which the
//! martingale compensation then cancels; the remaining jumps form a
//! compound Poisson process.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::{gamma, gamma_ur};

use super::{check_nonnegative, check_positive, integrate_path, standard_normal, SamplePath};
use crate::error::{config_err, Result};
use crate::grid::SamplingGrid;
use crate::seed::{rng_from_seed, SimRng};

/// Time convention of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BdlpClock {
    /// `dL_t` has the law of `dz_{lambda t}` with `z` the unit-rate BDLP, so
    /// the stationary law of `Y` is the configured marginal.
    #[default]
    Marginal,
    /// `L` is the unit-rate BDLP itself; the stationary law then has
    /// cumulant `1/lambda` times the configured marginal cumulant.
    Unscaled,
}

/// How the OU state maps to the price's spot variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolLink {
    /// Spot variance `e^{Y-1}`.
    #[default]
    Variance,
    /// Spot volatility `e^{Y-1}`, i.e. variance `e^{2(Y-1)}`.
    Volatility,
}

impl VolLink {
    pub fn variance(self, y: f64) -> f64 {
        match self {
            VolLink::Variance => (y - 1.0).exp(),
            VolLink::Volatility => (2.0 * (y - 1.0)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyOuSpec {
    /// Mean reversion per day.
    pub lambda: f64,
    /// Gaussian variance of the stationary law.
    pub gauss_var_marginal: f64,
    /// `A` in `A e^{-b x} x^{-1-p}`; zero disables jumps.
    pub jump_scale: f64,
    /// `b`.
    pub jump_tempering: f64,
    /// `p`, in `(0, 1)`.
    pub jump_index: f64,
    pub eps_cut: f64,
    pub clock: BdlpClock,
    pub link: VolLink,
}

impl Default for LevyOuSpec {
    fn default() -> Self {
        Self {
            lambda: 0.03,
            gauss_var_marginal: 1.0,
            jump_scale: 2.33,
            jump_tempering: 2.0,
            jump_index: 0.5,
            eps_cut: 1e-4,
            clock: BdlpClock::Marginal,
            link: VolLink::Variance,
        }
    }
}

impl LevyOuSpec {
    pub fn validate(&self) -> Result<()> {
        check_positive("model.lambda", self.lambda)?;
        check_nonnegative("model.gauss_var", self.gauss_var_marginal)?;
        check_nonnegative("model.jump_scale", self.jump_scale)?;
        check_positive("model.jump_tempering", self.jump_tempering)?;
        check_positive("model.eps_cut", self.eps_cut)?;
        if !(self.jump_index > 0.0 && self.jump_index < 1.0) {
            return Err(config_err(format!(
                "model.jump_index must lie in (0, 1), got {}",
                self.jump_index
            )));
        }
        Ok(())
    }

    /// Multiplier turning unit-rate BDLP characteristics into those of `L`.
    pub(crate) fn clock_scale(&self) -> f64 {
        match self.clock {
            BdlpClock::Marginal => self.lambda,
            BdlpClock::Unscaled => 1.0,
        }
    }
}

/// Precomputed characteristics of the truncated driving process.
#[derive(Debug, Clone, Copy)]
pub struct Bdlp {
    /// Gaussian variance per unit time.
    pub gauss_rate: f64,
    /// Rate of the `p x^{-1-p}` jump component above the cutoff.
    pub rate_stable: f64,
    /// Rate of the `b x^{-p}` jump component above the cutoff.
    pub rate_gamma: f64,
    /// Mean jump contribution per unit time, removed as drift.
    pub compensator: f64,
    eps: f64,
    p: f64,
    b: f64,
}

impl Bdlp {
    pub fn new(spec: &LevyOuSpec) -> Result<Self> {
        spec.validate()?;
        let scale = spec.clock_scale();
        let (a, b, p, eps) = (spec.jump_scale, spec.jump_tempering, spec.jump_index, spec.eps_cut);
        let z = b * eps;
        // upper incomplete gamma Γ(s, z)
        let upper = |s: f64| gamma_ur(s, z) * gamma(s);
        // Γ(-p, z) from Γ(1-p, z) = -p Γ(-p, z) + z^{-p} e^{-z}
        let upper_neg_p = (z.powf(-p) * (-z).exp() - upper(1.0 - p)) / p;
        let int_m1mp = b.powf(p) * upper_neg_p; // ∫ x^{-1-p} e^{-bx}
        let int_mp = b.powf(p - 1.0) * upper(1.0 - p); // ∫ x^{-p} e^{-bx}
        let int_1mp = b.powf(p - 2.0) * upper(2.0 - p); // ∫ x^{1-p} e^{-bx}
        Ok(Self {
            gauss_rate: 2.0 * spec.gauss_var_marginal * scale,
            rate_stable: scale * a * p * int_m1mp,
            rate_gamma: scale * a * b * int_mp,
            compensator: scale * a * (p * int_mp + b * int_1mp),
            eps,
            p,
            b,
        })
    }

    pub fn jump_rate(&self) -> f64 {
        self.rate_stable + self.rate_gamma
    }

    /// One jump size drawn from the normalised Lévy density on `[eps, ∞)`.
    pub fn sample_jump(&self, rng: &mut SimRng) -> f64 {
        let total = self.jump_rate();
        if rng.random::<f64>() * total < self.rate_stable {
            // Pareto(eps, p) proposal thinned by the exponential tempering
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let x = self.eps * u.powf(-1.0 / self.p);
                if rng.random::<f64>() < (-self.b * (x - self.eps)).exp() {
                    return x;
                }
            }
        } else {
            let g = Gamma::new(1.0 - self.p, 1.0 / self.b).expect("valid gamma parameters");
            loop {
                let x = g.sample(rng);
                if x >= self.eps {
                    return x;
                }
            }
        }
    }

    /// Sum of the jumps arriving during `dt`, and their count.
    pub fn sample_jumps(&self, dt: f64, rng: &mut SimRng) -> (f64, usize) {
        let mean = self.jump_rate() * dt;
        if mean <= 0.0 {
            return (0.0, 0);
        }
        let count = Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize;
        let sum = (0..count).map(|_| self.sample_jump(rng)).sum();
        (sum, count)
    }

    /// Zero-mean increment of `L` over `dt`.
    pub fn sample_increment(&self, dt: f64, rng: &mut SimRng) -> f64 {
        let gauss = if self.gauss_rate > 0.0 {
            (self.gauss_rate * dt).sqrt() * standard_normal(rng)
        } else {
            0.0
        };
        let (jumps, _) = self.sample_jumps(dt, rng);
        gauss + jumps - self.compensator * dt
    }
}

/// Standalone increment draw; builds the jump tables on every call, so
/// prefer [`Bdlp::sample_increment`] in loops.
pub fn sample_bdlp_increment(dt: f64, spec: &LevyOuSpec, rng: &mut SimRng) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(config_err(format!("dt must be positive, got {dt}")));
    }
    Ok(Bdlp::new(spec)?.sample_increment(dt, rng))
}

pub fn simulate_levy_ou_logvol(
    spec: &LevyOuSpec,
    y0: f64,
    grid: &SamplingGrid,
    seed: u64,
) -> Result<SamplePath> {
    let bdlp = Bdlp::new(spec)?;
    if !y0.is_finite() {
        return Err(config_err("initial OU state must be finite"));
    }
    let mut rng = rng_from_seed(seed);
    let h = grid.fine_step();
    let sqrt_h = h.sqrt();
    let decay = (-spec.lambda * h).exp();
    // midpoint weight for ∫ e^{-λ(h-s)} dL_s; keeps the stationary variance
    // error of the recursion at O((λh)²)
    let mid = (-0.5 * spec.lambda * h).exp();
    let link = spec.link;
    let (x_obs, v_fine) = integrate_path(grid, y0, |y| link.variance(y), |_, y| {
        let z = standard_normal(&mut rng);
        let dx = link.variance(y).sqrt() * sqrt_h * z;
        let y_next = decay * y + mid * bdlp.sample_increment(h, &mut rng);
        (dx, y_next)
    });
    Ok(SamplePath {
        grid: *grid,
        x_obs,
        v_fine,
        seed: Some(seed),
        price_jumps: 0,
    })
}
