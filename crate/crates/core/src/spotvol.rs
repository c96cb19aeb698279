//! Block-local spot variance estimators.
//!
//! The sample is cut into non-overlapping blocks of `k_n` increments
//! (length `u_n = k_n·Δn`). For block `i` the untruncated estimate is
//! `u_n^{-1} Σ_{j=1..k_n} (Δ_{i·k_n+j} X)²` and the truncated estimate keeps
//! only increments with `|Δ X| <= v_n` for the increment's threshold.
//! Increments after the last full block start no new block; the last
//! estimate is carried over to `T` instead.

use std::f64::consts::FRAC_PI_2;

use crate::error::{config_err, Error, Result};
use crate::grid::SamplingGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub k_n: usize,
    /// Exponent `γ` with `k_n ≍ Δn^{-γ}`, when the block size was derived from it.
    pub gamma_hint: Option<f64>,
}

impl BlockSpec {
    pub fn new(k_n: usize) -> Result<Self> {
        if k_n < 2 {
            return Err(config_err(format!("block.k_n must be at least 2, got {k_n}")));
        }
        Ok(Self { k_n, gamma_hint: None })
    }

    /// `k_n = round(Δn^{-γ})`.
    pub fn from_gamma(grid: &SamplingGrid, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(config_err(format!("block.gamma must lie in (0, 1), got {gamma}")));
        }
        let k_n = grid.delta_n().powf(-gamma).round() as usize;
        Ok(Self {
            gamma_hint: Some(gamma),
            ..Self::new(k_n)?
        })
    }

    pub fn u_n(&self, grid: &SamplingGrid) -> f64 {
        self.k_n as f64 * grid.delta_n()
    }

    /// `floor(T / u_n)`, checked to be at least one.
    pub fn n_blocks(&self, grid: &SamplingGrid) -> Result<usize> {
        let b = grid.n_obs() / self.k_n;
        if b == 0 {
            return Err(config_err(format!(
                "block of {} increments exceeds the {} available",
                self.k_n,
                grid.n_obs()
            )));
        }
        Ok(b)
    }
}

/// Threshold multiplier `c`, optionally grown at a logarithmic rate as the
/// mesh shrinks: `c_n = c·(1 + 0.1·ln(1/Δn)/ln 80)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub c: f64,
    pub log_scaled: bool,
}

impl Multiplier {
    pub fn constant(c: f64) -> Self {
        Self { c, log_scaled: false }
    }

    pub fn value(&self, delta_n: f64) -> f64 {
        if self.log_scaled {
            self.c * (1.0 + 0.1 * (1.0 / delta_n).ln() / 80f64.ln())
        } else {
            self.c
        }
    }
}

/// Jump truncation rule; every threshold has the form `α_{n,t}·Δn^ϖ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationSpec {
    None,
    /// `α = alpha` everywhere.
    Fixed { alpha: Multiplier, varpi: f64 },
    /// `α = c·sqrt(mean daily bipower variation)`.
    GlobalBv { c: Multiplier, varpi: f64 },
    /// `α = c·sqrt(BV_j)` on day `j`.
    DailyBv { c: Multiplier, varpi: f64 },
    /// `α = c·σ̂_i` on block `i`, with the local bipower estimate clamped to `[1/C, C]`.
    LocalBipower { c: Multiplier, varpi: f64, clamp: f64 },
}

impl TruncationSpec {
    /// `3·sqrt(BV_j)·Δn^0.49`, the Monte Carlo default.
    pub fn daily_bv_default() -> Self {
        TruncationSpec::DailyBv {
            c: Multiplier::constant(3.0),
            varpi: 0.49,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, varpi) = match *self {
            TruncationSpec::None => return Ok(()),
            TruncationSpec::Fixed { alpha, varpi } => (alpha, varpi),
            TruncationSpec::GlobalBv { c, varpi } | TruncationSpec::DailyBv { c, varpi } => (c, varpi),
            TruncationSpec::LocalBipower { c, varpi, clamp } => {
                if !(clamp >= 1.0) {
                    return Err(config_err(format!("trunc.clamp must be at least 1, got {clamp}")));
                }
                (c, varpi)
            }
        };
        if !(c.c.is_finite() && c.c > 0.0) {
            return Err(config_err(format!("trunc multiplier must be positive, got {}", c.c)));
        }
        if !(varpi > 0.0 && varpi < 0.5) {
            return Err(config_err(format!("trunc.varpi must lie in (0, 1/2), got {varpi}")));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            TruncationSpec::None => "none",
            TruncationSpec::Fixed { .. } => "fixed",
            TruncationSpec::GlobalBv { .. } => "global_bv",
            TruncationSpec::DailyBv { .. } => "daily_bv",
            TruncationSpec::LocalBipower { .. } => "local_bipower",
        }
    }
}

fn increments(x_obs: &[f64], grid: &SamplingGrid) -> Result<Vec<f64>> {
    if x_obs.len() != grid.n_obs() + 1 {
        return Err(Error::InsufficientData(format!(
            "expected {} prices for the grid, got {}",
            grid.n_obs() + 1,
            x_obs.len()
        )));
    }
    Ok(x_obs.windows(2).map(|w| w[1] - w[0]).collect())
}

fn bipower_sum(dx: &[f64]) -> f64 {
    dx.windows(2).map(|w| w[0].abs() * w[1].abs()).sum()
}

/// Bipower variation of day `day` (0-based):
/// `(π/2) Σ |Δ_{i-1} X| |Δ_i X|` over adjacent increment pairs inside the day.
pub fn bipower_daily(x_obs: &[f64], grid: &SamplingGrid, day: usize) -> Result<f64> {
    let dx = increments(x_obs, grid)?;
    bipower_daily_from_increments(&dx, grid, day)
}

fn bipower_daily_from_increments(dx: &[f64], grid: &SamplingGrid, day: usize) -> Result<f64> {
    if day >= grid.n_days() {
        return Err(Error::OutOfRange(format!(
            "day {day} outside the {}-day horizon",
            grid.n_days()
        )));
    }
    let range = grid.day_increments(day);
    if range.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "day {day} holds {} increments; bipower variation needs at least 2",
            range.len()
        )));
    }
    Ok(FRAC_PI_2 * bipower_sum(&dx[range]))
}

/// Local bipower volatility
/// `σ̂ = ((π/2) u_n^{-1} Σ_{j=1..k_n} |Δ_{i+j} X| |Δ_{i+j+1} X|)^{1/2}`
/// where `increments[start..]` holds `Δ_{i+1} X, Δ_{i+2} X, …`.
pub fn local_bipower(increments: &[f64], start: usize, k_n: usize, u_n: f64) -> Result<f64> {
    let end = start + k_n + 1;
    if end > increments.len() {
        return Err(Error::InsufficientData(format!(
            "local bipower at {start} needs {} increments, {} available",
            k_n + 1,
            increments.len().saturating_sub(start)
        )));
    }
    Ok((FRAC_PI_2 * bipower_sum(&increments[start..end]) / u_n).sqrt())
}

/// Per-increment thresholds `v_{n,t}`; `f64::INFINITY` when untruncated.
pub fn truncation_levels(
    spec: &TruncationSpec,
    x_obs: &[f64],
    grid: &SamplingGrid,
    block: &BlockSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let dx = increments(x_obs, grid)?;
    thresholds_from_increments(spec, &dx, grid, block)
}

fn thresholds_from_increments(
    spec: &TruncationSpec,
    dx: &[f64],
    grid: &SamplingGrid,
    block: &BlockSpec,
) -> Result<Vec<f64>> {
    let delta = grid.delta_n();
    let n = dx.len();
    match *spec {
        TruncationSpec::None => Ok(vec![f64::INFINITY; n]),
        TruncationSpec::Fixed { alpha, varpi } => Ok(vec![alpha.value(delta) * delta.powf(varpi); n]),
        TruncationSpec::GlobalBv { c, varpi } => {
            let days = grid.n_days();
            let mut rate_sum = 0.0;
            for d in 0..days {
                let range = grid.day_increments(d);
                let length = range.len() as f64 * delta;
                rate_sum += bipower_daily_from_increments(dx, grid, d)? / length;
            }
            let mean_bv = rate_sum / days as f64;
            Ok(vec![c.value(delta) * mean_bv.sqrt() * delta.powf(varpi); n])
        }
        TruncationSpec::DailyBv { c, varpi } => {
            let scale = c.value(delta) * delta.powf(varpi);
            let mut out = vec![0.0; n];
            for d in 0..grid.n_days() {
                let level = scale * bipower_daily_from_increments(dx, grid, d)?.sqrt();
                out[grid.day_increments(d)].fill(level);
            }
            Ok(out)
        }
        TruncationSpec::LocalBipower { c, varpi, clamp } => {
            let b = block.n_blocks(grid)?;
            let k = block.k_n;
            let u_n = block.u_n(grid);
            if n < k + 1 {
                return Err(Error::InsufficientData(
                    "local bipower needs k_n + 1 increments".into(),
                ));
            }
            let scale = c.value(delta) * delta.powf(varpi);
            let mut out = vec![0.0; n];
            for i in 0..b {
                // the final block has no look-ahead increment when the sample
                // ends with it; its window then ends at the last increment
                let start = (i * k).min(n - k - 1);
                let sigma = local_bipower(dx, start, k, u_n)?.clamp(1.0 / clamp, clamp);
                let end = if i + 1 == b { n } else { (i + 1) * k };
                out[i * k..end].fill(scale * sigma);
            }
            Ok(out)
        }
    }
}

/// Block estimates and the geometry needed to extend them to `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotVolSeries {
    pub block_spec: BlockSpec,
    pub grid: SamplingGrid,
    /// Untruncated estimates `V̂*`.
    pub v_hat_star: Vec<f64>,
    /// Truncated estimates `V̂`.
    pub v_hat: Vec<f64>,
    pub block_start_times: Vec<f64>,
    /// Threshold applied to the first increment of each block.
    pub threshold_used: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimate {
    #[default]
    Truncated,
    Untruncated,
}

impl SpotVolSeries {
    /// Series from precomputed block values, mainly for tests and tooling.
    pub fn from_blocks(grid: SamplingGrid, block_spec: BlockSpec, v_hat_star: Vec<f64>, v_hat: Vec<f64>) -> Result<Self> {
        let b = block_spec.n_blocks(&grid)?;
        if v_hat_star.len() != b || v_hat.len() != b {
            return Err(config_err(format!(
                "grid and block size imply {b} blocks, got {} and {} values",
                v_hat_star.len(),
                v_hat.len()
            )));
        }
        let u_n = block_spec.u_n(&grid);
        Ok(Self {
            block_spec,
            grid,
            v_hat_star,
            v_hat,
            block_start_times: (0..b).map(|i| i as f64 * u_n).collect(),
            threshold_used: vec![f64::INFINITY; b],
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.v_hat.len()
    }

    pub fn u_n(&self) -> f64 {
        self.block_spec.u_n(&self.grid)
    }

    pub fn values(&self, which: Estimate) -> &[f64] {
        match which {
            Estimate::Truncated => &self.v_hat,
            Estimate::Untruncated => &self.v_hat_star,
        }
    }

    /// Block whose estimate is in force at time `t` under the extension rule.
    pub fn block_at(&self, t: f64) -> usize {
        let i = (t / self.u_n() + 1e-9).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_blocks() - 1)
        }
    }

    /// Block in force on fine interval `k`, for a fine grid that nests the
    /// observation grid `substeps` times.
    pub fn block_at_fine(&self, k: usize, substeps: usize) -> usize {
        ((k / substeps) / self.block_spec.k_n).min(self.n_blocks() - 1)
    }

    /// Piecewise-constant extension `V̂_t`.
    pub fn value_at(&self, t: f64, which: Estimate) -> f64 {
        self.values(which)[self.block_at(t)]
    }

    /// Time each block's estimate is in force; the last block also covers the tail.
    pub fn block_weights(&self) -> Vec<f64> {
        let u_n = self.u_n();
        let b = self.n_blocks();
        let mut w = vec![u_n; b];
        w[b - 1] = self.grid.horizon() - (b - 1) as f64 * u_n;
        w
    }
}

/// Block spot-variance estimates from observed prices.
pub fn spot_variance_blocks(
    x_obs: &[f64],
    grid: &SamplingGrid,
    block: &BlockSpec,
    trunc: &TruncationSpec,
) -> Result<SpotVolSeries> {
    trunc.validate()?;
    let dx = increments(x_obs, grid)?;
    let b = block.n_blocks(grid)?;
    let thresholds = thresholds_from_increments(trunc, &dx, grid, block)?;
    let k = block.k_n;
    let u_n = block.u_n(grid);
    let mut v_hat_star = Vec::with_capacity(b);
    let mut v_hat = Vec::with_capacity(b);
    let mut threshold_used = Vec::with_capacity(b);
    for i in 0..b {
        let range = i * k..(i + 1) * k;
        let (mut all, mut kept) = (0.0, 0.0);
        for (x, thr) in dx[range.clone()].iter().zip(&thresholds[range]) {
            let sq = x * x;
            all += sq;
            if x.abs() <= *thr {
                kept += sq;
            }
        }
        v_hat_star.push(all / u_n);
        v_hat.push(kept / u_n);
        threshold_used.push(thresholds[i * k]);
    }
    Ok(SpotVolSeries {
        block_spec: *block,
        grid: *grid,
        v_hat_star,
        v_hat,
        block_start_times: (0..b).map(|i| i as f64 * u_n).collect(),
        threshold_used,
    })
}
