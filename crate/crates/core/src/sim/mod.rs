//! Price/volatility models simulated on a fine internal grid.
//!
//! Every simulator returns a [`SamplePath`]: the price observed on the
//! observation grid and the true spot variance on the fine grid.

mod cir;
mod const_vol;
mod invariant;
mod levy_ou;

pub use cir::{simulate_cir, simulate_cir_with, CirSpec};
pub use const_vol::{simulate_const_vol, simulate_const_vol_with, ConstVolSpec, JumpSize, PriceJumps};
pub use invariant::{invariant_quantile, ou_state_quantile};
pub use levy_ou::{
    sample_bdlp_increment, simulate_levy_ou_logvol, Bdlp, BdlpClock, LevyOuSpec, VolLink,
};

use crate::error::{config_err, Result};
use crate::grid::SamplingGrid;
use crate::seed::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Cir(CirSpec),
    LevyOuLogVol(LevyOuSpec),
    ConstVol(ConstVolSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Cir(s) => s.validate(),
            ModelSpec::LevyOuLogVol(s) => s.validate(),
            ModelSpec::ConstVol(s) => s.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Cir(_) => "cir",
            ModelSpec::LevyOuLogVol(_) => "levy_ou",
            ModelSpec::ConstVol(_) => "const_vol",
        }
    }

    pub fn has_continuous_volatility(&self) -> bool {
        !matches!(self, ModelSpec::LevyOuLogVol(s) if s.jump_scale > 0.0)
    }

    /// Initial state of the model's driving variable that corresponds to the
    /// `p`-quantile of the invariant law: a variance for `Cir`, the OU state
    /// for `LevyOuLogVol` and the constant variance for `ConstVol`.
    pub fn start_state(&self, p: f64) -> Result<f64> {
        match self {
            ModelSpec::Cir(_) | ModelSpec::ConstVol(_) => invariant_quantile(self, p),
            ModelSpec::LevyOuLogVol(s) => ou_state_quantile(s, p),
        }
    }

    /// Simulates one path started from `start` (see [`ModelSpec::start_state`]).
    pub fn simulate(&self, start: f64, grid: &SamplingGrid, seed: u64) -> Result<SamplePath> {
        match self {
            ModelSpec::Cir(s) => simulate_cir(s, start, grid, seed),
            ModelSpec::LevyOuLogVol(s) => simulate_levy_ou_logvol(s, start, grid, seed),
            ModelSpec::ConstVol(s) => simulate_const_vol(s, grid, seed),
        }
    }
}

/// Observed prices plus the latent variance path.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: SamplingGrid,
    /// Prices at `i·Δn`, `i = 0..=n_obs`.
    pub x_obs: Vec<f64>,
    /// True spot variance at the fine nodes `k·Δn/substeps`, `k = 0..=n_fine`.
    pub v_fine: Vec<f64>,
    pub seed: Option<u64>,
    /// Number of price jumps that fired (compound-Poisson component only).
    pub price_jumps: usize,
}

impl SamplePath {
    pub fn increments(&self) -> Vec<f64> {
        self.x_obs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn fine_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.v_fine.len()).map(move |k| self.grid.fine_time(k))
    }
}

/// Walks the fine grid, feeding each step's price increment into the
/// observation series. `step` maps the current state at fine node `k` to
/// `(dx, next_state)`; `variance` maps a state to the spot variance.
pub(crate) fn integrate_path<V, F>(
    grid: &SamplingGrid,
    state0: f64,
    variance: V,
    mut step: F,
) -> (Vec<f64>, Vec<f64>)
where
    V: Fn(f64) -> f64,
    F: FnMut(usize, f64) -> (f64, f64),
{
    let mut x_obs = Vec::with_capacity(grid.n_obs() + 1);
    let mut v_fine = Vec::with_capacity(grid.n_fine() + 1);
    let mut x = 0.0;
    let mut state = state0;
    x_obs.push(x);
    v_fine.push(variance(state));
    for i in 0..grid.n_obs() {
        for s in 0..grid.substeps() {
            let (dx, next) = step(i * grid.substeps() + s, state);
            x += dx;
            state = next;
            v_fine.push(variance(state));
        }
        x_obs.push(x);
    }
    (x_obs, v_fine)
}

pub(crate) fn standard_normal(rng: &mut SimRng) -> f64 {
    use rand::Rng;
    rng.sample(rand_distr::StandardNormal)
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be non-negative, got {v}")))
    }
}
