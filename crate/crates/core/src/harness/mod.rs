//! Monte Carlo studies: quantile bias/MAD tables, the extreme-value check
//! for constant volatility, and the sup-error rate study.
//!
//! Replicas run on a private rayon pool and are collected in index order,
//! so reports are bit-identical for any worker count.

mod config;
mod evt;
mod mc;
mod rates;

pub use config::{
    default_workers, grid_echo, model_echo, trunc_echo, KeyValues, McConfig, RateStudyConfig,
    DEFAULT_LADDER,
};
pub use evt::{run_evt, EvtReport};
pub use mc::{run_mc, McReport, McRow};
pub use rates::{run_rate_study, RateReport, RateRow};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f(0..n)` on `workers` threads and returns the results in index
/// order. The first failing index (lowest, not earliest) is reported.
pub fn run_replicas<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let outcomes: Vec<Result<T>> = if workers <= 1 {
        (0..n).map(&f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(&f).collect())
    };
    outcomes
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replica {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; zero for a single observation.
fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
