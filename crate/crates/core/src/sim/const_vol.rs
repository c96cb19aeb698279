//! Constant variance with optional compound-Poisson price jumps.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{check_nonnegative, check_positive, integrate_path, standard_normal, SamplePath};
use crate::error::{config_err, Result};
use crate::grid::SamplingGrid;
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpSize {
    /// `+size` or `-size` with equal probability.
    Symmetric(f64),
    Normal { mean: f64, sd: f64 },
}

impl JumpSize {
    fn mean(&self) -> f64 {
        match self {
            JumpSize::Symmetric(_) => 0.0,
            JumpSize::Normal { mean, .. } => *mean,
        }
    }

    fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            JumpSize::Symmetric(s) => {
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            }
            JumpSize::Normal { mean, sd } => mean + sd * standard_normal(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceJumps {
    /// Jumps per day.
    pub rate: f64,
    pub size: JumpSize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstVolSpec {
    pub v: f64,
    pub price_jumps: Option<PriceJumps>,
}

impl ConstVolSpec {
    pub fn new(v: f64) -> Self {
        Self { v, price_jumps: None }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("model.v", self.v)?;
        if let Some(j) = &self.price_jumps {
            check_nonnegative("model.jump_rate", j.rate)?;
            match j.size {
                JumpSize::Symmetric(s) if !s.is_finite() => {
                    return Err(config_err("model.jump_size must be finite"))
                }
                JumpSize::Normal { mean, sd } if !(mean.is_finite() && sd.is_finite() && sd >= 0.0) => {
                    return Err(config_err("normal jump law needs finite mean and non-negative sd"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn simulate_const_vol(spec: &ConstVolSpec, grid: &SamplingGrid, seed: u64) -> Result<SamplePath> {
    let mut rng = rng_from_seed(seed);
    let mut path = simulate_const_vol_with(spec, grid, &mut rng)?;
    path.seed = Some(seed);
    Ok(path)
}

/// `X_t = sqrt(v) W_t` plus compensated compound-Poisson jumps.
pub fn simulate_const_vol_with(spec: &ConstVolSpec, grid: &SamplingGrid, rng: &mut SimRng) -> Result<SamplePath> {
    spec.validate()?;
    let h = grid.fine_step();
    let sd = (spec.v * h).sqrt();
    let jump_law = spec
        .price_jumps
        .filter(|j| j.rate > 0.0)
        .map(|j| (Poisson::new(j.rate * h).expect("positive rate"), j));
    let mut count = 0usize;
    let (x_obs, v_fine) = integrate_path(grid, spec.v, |v| v, |_, v| {
        let mut dx = sd * standard_normal(rng);
        if let Some((poisson, jumps)) = &jump_law {
            let n = poisson.sample(rng) as usize;
            for _ in 0..n {
                dx += jumps.size.sample(rng);
            }
            dx -= jumps.rate * jumps.size.mean() * h;
            count += n;
        }
        (dx, v)
    });
    Ok(SamplePath {
        grid: *grid,
        x_obs,
        v_fine,
        seed: None,
        price_jumps: count,
    })
}
