use super::{run_replicas, McConfig};
use crate::error::{config_err, Result};
use crate::oracle::{evt_normalization, gumbel2_cdf, ks_distance};
use crate::seed::replica_seed;
use crate::sim::ModelSpec;
use crate::spotvol::{spot_variance_blocks, Estimate};

#[derive(Debug, Clone, PartialEq)]
pub struct EvtReport {
    pub b_n: usize,
    pub m_n: f64,
    pub c_n: f64,
    /// `M_n = max_i |Z_i|` per replica.
    pub maxima: Vec<f64>,
    /// `(M_n - m_n) / c_n` per replica.
    pub normalized: Vec<f64>,
    /// Kolmogorov–Smirnov distance of `normalized` to `exp(-2 e^{-x})`.
    pub ks: f64,
    pub median: f64,
}

/// Normalized maximum block error under constant volatility.
///
/// `Z_i = sqrt(k_n)(V̂_i - V)/(sqrt(2) V)` uses the estimate selected by the
/// configured truncation, which is `V̂*` when truncation is `None`.
pub fn run_evt(config: &McConfig) -> Result<EvtReport> {
    config.validate()?;
    let v = match &config.model {
        ModelSpec::ConstVol(s) => s.v,
        other => {
            return Err(config_err(format!(
                "the extreme-value study needs a const_vol model, got {}",
                other.name()
            )))
        }
    };
    let b_n = config.block.n_blocks(&config.grid)?;
    if b_n < 10 {
        return Err(config_err(format!("the extreme-value study needs at least 10 blocks, got {b_n}")));
    }
    let (m_n, c_n) = evt_normalization(b_n)?;
    let scale = (config.block.k_n as f64).sqrt() / (2f64.sqrt() * v);
    let maxima = run_replicas(config.n_replicas, config.workers, |i| {
        let seed = replica_seed(config.base_seed, i as u64);
        let path = config.model.simulate(v, &config.grid, seed)?;
        let series = spot_variance_blocks(&path.x_obs, &config.grid, &config.block, &config.trunc)?;
        Ok(series
            .values(Estimate::Truncated)
            .iter()
            .map(|vh| (scale * (vh - v)).abs())
            .fold(0.0, f64::max))
    })?;
    let normalized: Vec<f64> = maxima.iter().map(|m| (m - m_n) / c_n).collect();
    let ks = ks_distance(&normalized, gumbel2_cdf)?;
    let mut sorted = normalized.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Ok(EvtReport {
        b_n,
        m_n,
        c_n,
        maxima,
        normalized,
        ks,
        median,
    })
}
