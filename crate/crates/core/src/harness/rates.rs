use super::{mean, run_replicas, RateStudyConfig};
use crate::error::{config_err, Result};
use crate::grid::SamplingGrid;
use crate::occupation::sup_error;
use crate::seed::replica_seed;
use crate::sim::ModelSpec;
use crate::spotvol::{spot_variance_blocks, BlockSpec, Estimate, TruncationSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub delta_n: f64,
    pub k_n: usize,
    /// Mean over replicas of `sup_t |V̂*_t - V_t|`.
    pub mean_eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub config: RateStudyConfig,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln mean_eta` on `ln Δn`.
    pub slope: f64,
    pub strictly_decreasing: bool,
}

/// Mean sup-error of the untruncated block estimator along the ladder.
pub fn run_rate_study(config: &RateStudyConfig) -> Result<RateReport> {
    config.validate()?;
    let continuous_price = match &config.model {
        ModelSpec::ConstVol(s) => s.price_jumps.is_none_or(|j| j.rate == 0.0),
        _ => true,
    };
    if !config.model.has_continuous_volatility() || !continuous_price {
        return Err(config_err(
            "the sup-error study needs a model without jumps in price or volatility",
        ));
    }
    let start = config.model.start_state(config.start_quantile)?;
    let mut rows = Vec::with_capacity(config.ladder.len());
    for &n in &config.ladder {
        let grid = SamplingGrid::new(config.horizon, n, config.fine_per_day / n)?;
        let block = BlockSpec::from_gamma(&grid, config.gamma)?;
        let eta = run_replicas(config.n_replicas, config.workers, |i| {
            let seed = replica_seed(config.base_seed, i as u64);
            let path = config.model.simulate(start, &grid, seed)?;
            let series = spot_variance_blocks(&path.x_obs, &grid, &block, &TruncationSpec::None)?;
            sup_error(&series, Estimate::Untruncated, &path.v_fine, grid.fine_step())
        })?;
        rows.push(RateRow {
            n,
            delta_n: grid.delta_n(),
            k_n: block.k_n,
            mean_eta: mean(&eta),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.delta_n.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_eta.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].mean_eta < w[0].mean_eta);
    Ok(RateReport {
        config: config.clone(),
        rows,
        slope: sxy / sxx,
        strictly_decreasing,
    })
}
