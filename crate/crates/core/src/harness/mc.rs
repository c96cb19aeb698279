use super::{mean, run_replicas, std_error, McConfig};
use crate::error::Result;
use crate::occupation::occupation_curve;
use crate::oracle::OracleOccupation;
use crate::seed::replica_seed;
use crate::spotvol::{spot_variance_blocks, Estimate};

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    /// Quantile level as a fraction of the horizon.
    pub alpha: f64,
    /// Mean over replicas of the true (path-wise) quantile.
    pub true_mean: f64,
    /// Mean of `Q̂ - Q`.
    pub bias: f64,
    /// Mean of `|Q̂ - Q|`.
    pub mad: f64,
    /// Standard error of `bias`.
    pub mc_stderr: f64,
    pub n_replicas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub config: McConfig,
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn row(&self, alpha: f64) -> Option<&McRow> {
        self.rows.iter().find(|r| r.alpha == alpha)
    }
}

/// Estimated and true quantiles of one replica, one pair per alpha.
pub(crate) fn replica_quantiles(config: &McConfig, start: f64, index: usize) -> Result<Vec<(f64, f64)>> {
    let seed = replica_seed(config.base_seed, index as u64);
    let path = config.model.simulate(start, &config.grid, seed)?;
    let series = spot_variance_blocks(&path.x_obs, &config.grid, &config.block, &config.trunc)?;
    let curve = occupation_curve(&series, Estimate::Truncated)?;
    let oracle = OracleOccupation::new(&path.v_fine, config.grid.fine_step())?;
    config
        .alphas
        .iter()
        .map(|&a| Ok((curve.quantile(a)?, oracle.quantile(a)?)))
        .collect()
}

/// Bias and MAD of the truncated occupation-time quantile estimator against
/// each path's own true quantile.
pub fn run_mc(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let start = config.model.start_state(config.start_quantile)?;
    let per_replica = run_replicas(config.n_replicas, config.workers, |i| {
        replica_quantiles(config, start, i)
    })?;
    let rows = config
        .alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let truth: Vec<f64> = per_replica.iter().map(|q| q[j].1).collect();
            let err: Vec<f64> = per_replica.iter().map(|q| q[j].0 - q[j].1).collect();
            let abs: Vec<f64> = err.iter().map(|e| e.abs()).collect();
            McRow {
                alpha,
                true_mean: mean(&truth),
                bias: mean(&err),
                mad: mean(&abs),
                mc_stderr: std_error(&err),
                n_replicas: config.n_replicas,
            }
        })
        .collect();
    Ok(McReport {
        config: config.clone(),
        rows,
    })
}
