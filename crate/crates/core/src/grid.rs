use crate::error::{config_err, Result};

/// Equispaced observation grid on `[0, T]` together with the finer
/// simulation grid nested inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    horizon: f64,
    delta_n: f64,
    n_obs: usize,
    substeps: usize,
}

impl SamplingGrid {
    /// Grid with `n_per_day` observations per unit of time over `horizon` days.
    pub fn new(horizon: f64, n_per_day: usize, substeps: usize) -> Result<Self> {
        if n_per_day == 0 {
            return Err(config_err("grid.n_per_day must be positive"));
        }
        Self::from_mesh(horizon, 1.0 / n_per_day as f64, substeps)
    }

    /// Grid with an arbitrary observation mesh. `horizon / delta_n` must be an
    /// integer up to rounding.
    pub fn from_mesh(horizon: f64, delta_n: f64, substeps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(config_err(format!("horizon must be positive, got {horizon}")));
        }
        if !(delta_n.is_finite() && delta_n > 0.0) {
            return Err(config_err(format!("delta_n must be positive, got {delta_n}")));
        }
        if substeps == 0 {
            return Err(config_err("grid.substeps must be at least 1"));
        }
        let ratio = horizon / delta_n;
        let n_obs = ratio.round();
        if n_obs < 1.0 {
            return Err(config_err("horizon shorter than one observation interval"));
        }
        if (ratio - n_obs).abs() > 1e-9 * n_obs.max(1.0) {
            return Err(config_err(format!(
                "horizon {horizon} is not a whole number of observation intervals of length {delta_n}"
            )));
        }
        Ok(Self {
            horizon,
            delta_n,
            n_obs: n_obs as usize,
            substeps,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    /// Observations per unit of time, `1 / delta_n`.
    pub fn n_per_day(&self) -> f64 {
        1.0 / self.delta_n
    }

    /// Number of increments; there are `n_obs + 1` observed prices.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn fine_step(&self) -> f64 {
        self.delta_n / self.substeps as f64
    }

    /// Number of fine-grid intervals; there are `n_fine + 1` fine nodes.
    pub fn n_fine(&self) -> usize {
        self.n_obs * self.substeps
    }

    pub fn obs_time(&self, i: usize) -> f64 {
        i as f64 * self.delta_n
    }

    pub fn fine_time(&self, k: usize) -> f64 {
        k as f64 * self.fine_step()
    }

    /// Same observation grid with a different refinement factor.
    pub fn with_substeps(&self, substeps: usize) -> Result<Self> {
        Self::from_mesh(self.horizon, self.delta_n, substeps)
    }

    /// Index range of increments (0-based, increment `m` spans
    /// `[m·Δ, (m+1)·Δ]`) whose left endpoint lies in day `day`.
    pub fn day_increments(&self, day: usize) -> std::ops::Range<usize> {
        let start = self.index_at(day as f64);
        let end = self.index_at(day as f64 + 1.0);
        start.min(self.n_obs)..end.min(self.n_obs)
    }

    /// Number of (possibly partial) unit-length days covering `[0, T]`.
    pub fn n_days(&self) -> usize {
        let full = (self.horizon + 1e-9).floor() as usize;
        if self.horizon - full as f64 > 1e-9 {
            full + 1
        } else {
            full.max(1)
        }
    }

    /// Day index containing the left endpoint of increment `m`.
    pub fn day_of_increment(&self, m: usize) -> usize {
        ((m as f64 * self.delta_n) + 1e-9).floor() as usize
    }

    fn index_at(&self, t: f64) -> usize {
        (t / self.delta_n + 1e-9).floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_grids() {
        let g = SamplingGrid::new(22.0, 80, 10).unwrap();
        assert_eq!(g.n_obs(), 1760);
        assert_eq!(g.n_fine(), 17600);
        assert!((g.n_obs() as f64 * g.delta_n() - 22.0).abs() < 1e-12);
        let g = SamplingGrid::new(22.0, 400, 10).unwrap();
        assert_eq!(g.n_obs(), 8800);
        assert_eq!(g.day_increments(3), 1200..1600);
        assert_eq!(g.n_days(), 22);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SamplingGrid::new(0.0, 80, 10).is_err());
        assert!(SamplingGrid::new(22.0, 0, 10).is_err());
        assert!(SamplingGrid::new(22.0, 80, 0).is_err());
        assert!(SamplingGrid::from_mesh(1.0, 0.3, 1).is_err());
    }

    #[test]
    fn partial_last_day() {
        let g = SamplingGrid::from_mesh(2.5, 0.25, 1).unwrap();
        assert_eq!(g.n_days(), 3);
        assert_eq!(g.day_increments(2), 8..10);
        assert_eq!(g.day_of_increment(9), 2);
    }
}
