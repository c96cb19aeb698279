//! Occupation-time curve of the recovered variance path.
//!
//! `F̂(x) = ∫_0^T 1{V̂_s <= x} ds` is a right-continuous step function with
//! an atom of mass `u_n` at every block estimate (the last block also
//! carries the tail after `floor(T/u_n)·u_n`). Quantiles use the
//! left-continuous inverse `Q̂(α) = inf{x : F̂(x) >= α}`.

use crate::error::{Error, Result};
use crate::spotvol::{Estimate, SpotVolSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationCurve {
    levels: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    total_time: f64,
}

impl OccupationCurve {
    /// Curve from arbitrary `(level, time mass)` atoms. Equal levels are
    /// merged; `total_time` pins the final cumulative value.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>, total_time: f64) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::InsufficientData("occupation curve needs at least one level".into()));
        }
        if atoms.iter().any(|(v, w)| !v.is_finite() || !(w.is_finite() && *w > 0.0)) {
            return Err(Error::OutOfRange("levels must be finite and weights positive".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match levels.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += w,
                _ => {
                    levels.push(v);
                    weights.push(w);
                }
            }
        }
        let mut cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        *cumulative.last_mut().unwrap() = total_time;
        Ok(Self {
            levels,
            weights,
            cumulative,
            total_time,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `F̂` at each level.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Occupation time `F̂(x)` of `(-∞, x]`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let idx = self.levels.partition_point(|&v| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `Q̂(alpha_frac·T)`: the smallest level whose cumulative time reaches
    /// `alpha_frac·T`. Cumulative sums are compared with a relative slack of
    /// `1e-12·T` so that exact block-count boundaries are not lost to
    /// rounding in the running sum.
    pub fn quantile(&self, alpha_frac: f64) -> Result<f64> {
        if !(alpha_frac > 0.0 && alpha_frac < 1.0) {
            return Err(Error::OutOfRange(format!(
                "quantile fraction must lie in (0, 1), got {alpha_frac}"
            )));
        }
        let target = alpha_frac * self.total_time - 1e-12 * self.total_time;
        let idx = self.cumulative.partition_point(|&c| c < target);
        Ok(self.levels[idx.min(self.levels.len() - 1)])
    }

    /// Quantile at an absolute time level `alpha ∈ (0, T]`.
    pub fn quantile_at_time(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha <= self.total_time) {
            return Err(Error::OutOfRange(format!(
                "time level must lie in (0, T], got {alpha}"
            )));
        }
        let target = alpha - 1e-12 * self.total_time;
        let idx = self.cumulative.partition_point(|&c| c < target);
        Ok(self.levels[idx.min(self.levels.len() - 1)])
    }

    /// `∫ g dF̂ = Σ weight·g(level)`.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.levels.iter().zip(&self.weights).map(|(&v, &w)| w * g(v)).sum()
    }
}

/// Occupation curve of the piecewise-constant extension of the chosen estimate.
pub fn occupation_curve(series: &SpotVolSeries, which: Estimate) -> Result<OccupationCurve> {
    if series.n_blocks() == 0 {
        return Err(Error::InsufficientData("empty spot variance series".into()));
    }
    let values = series.values(which);
    let atoms = values.iter().copied().zip(series.block_weights());
    OccupationCurve::from_atoms(atoms, series.grid.horizon())
}

/// `sup_t |V̂_t - V_t|` over the nodes of a truth path sampled every
/// `truth_step` on `[0, T]`.
pub fn sup_error(series: &SpotVolSeries, which: Estimate, truth: &[f64], truth_step: f64) -> Result<f64> {
    if truth.len() < 2 {
        return Err(Error::InsufficientData("truth path needs at least two nodes".into()));
    }
    let span = (truth.len() - 1) as f64 * truth_step;
    let horizon = series.grid.horizon();
    if (span - horizon).abs() > 1e-9 * horizon {
        return Err(Error::OutOfRange(format!(
            "truth path covers [0, {span}] but the estimate covers [0, {horizon}]"
        )));
    }
    let values = series.values(which);
    let ratio = series.grid.delta_n() / truth_step;
    let nested = (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0;
    let substeps = ratio.round() as usize;
    let eta = truth
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let block = if nested {
                series.block_at_fine(k, substeps)
            } else {
                series.block_at(k as f64 * truth_step)
            };
            (values[block] - v).abs()
        })
        .fold(0.0, f64::max);
    Ok(eta)
}
