use volocc::seed::replica_seed;
use volocc::sim::{
    invariant_quantile, CirSpec, LevyOuSpec, ModelSpec, VolLink,
};
use volocc::SamplingGrid;

fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn empirical_quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s[((p * s.len() as f64).ceil() as usize).saturating_sub(1)]
}

#[test]
fn gaussian_ou_stationary_variance() {
    // Gaussian driver with variance c = 2·lambda·gauss_var per day.
    let lambda = 1.0;
    let spec = LevyOuSpec {
        lambda,
        gauss_var_marginal: 0.8,
        jump_scale: 0.0,
        ..LevyOuSpec::default()
    };
    let c = 2.0 * lambda * spec.gauss_var_marginal;
    let grid = SamplingGrid::new(20_000.0, 1, 10).unwrap();
    let path = ModelSpec::LevyOuLogVol(spec).simulate(0.0, &grid, 3).unwrap();
    let y: Vec<f64> = path.v_fine.iter().map(|v| v.ln() + 1.0).collect();
    let var = sample_variance(&y);
    let target = c / (2.0 * lambda);
    assert!((var / target - 1.0).abs() < 0.05, "variance {var} vs {target}");
}

#[test]
fn log_vol_long_run_quantiles_match_invariant_law() {
    let spec = LevyOuSpec::default();
    assert_eq!(spec.link, VolLink::Variance);
    let model = ModelSpec::LevyOuLogVol(spec);
    let start = model.start_state(0.5).unwrap();
    let grid = SamplingGrid::new(2_000_000.0, 1, 4).unwrap();
    let path = model.simulate(start, &grid, 5).unwrap();
    for p in [0.25, 0.5, 0.75] {
        let sim = empirical_quantile(&path.v_fine, p);
        let law = invariant_quantile(&model, p).unwrap();
        assert!((sim / law - 1.0).abs() < 0.02, "p={p}: simulated {sim} vs invariant {law}");
    }
}

#[test]
fn cir_variance_is_nonnegative_and_rarely_touches_zero() {
    // Full truncation can overshoot below zero for one step; the reported
    // variance is the clipped value that drives the price.
    let model = ModelSpec::Cir(CirSpec::default());
    let grid = SamplingGrid::new(22.0, 80, 10).unwrap();
    let start = model.start_state(0.25).unwrap();
    let mut touched = 0;
    for i in 0..1000 {
        let path = model.simulate(start, &grid, replica_seed(21, i)).unwrap();
        assert_eq!(path.x_obs.len(), grid.n_obs() + 1);
        assert_eq!(path.v_fine.len(), grid.n_fine() + 1);
        assert!(path.v_fine.iter().all(|v| *v >= 0.0), "replica {i}");
        if path.v_fine.contains(&0.0) {
            touched += 1;
        }
    }
    assert!(touched <= 10, "{touched} paths reached zero");
}

#[test]
fn cir_invariant_mean_is_theta() {
    // Gamma(1.5, 2/3) quantiles straddle the mean 1 and its median is below it.
    let model = ModelSpec::Cir(CirSpec::default());
    let q: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&p| invariant_quantile(&model, p).unwrap())
        .collect();
    assert!(q[0] < q[1] && q[1] < 1.0 && 1.0 < q[2]);
}

#[test]
fn paths_are_seed_deterministic() {
    let grid = SamplingGrid::new(5.0, 80, 5).unwrap();
    for model in [
        ModelSpec::Cir(CirSpec::default()),
        ModelSpec::LevyOuLogVol(LevyOuSpec::default()),
    ] {
        let start = model.start_state(0.5).unwrap();
        let a = model.simulate(start, &grid, 9).unwrap();
        let b = model.simulate(start, &grid, 9).unwrap();
        let c = model.simulate(start, &grid, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x_obs, c.x_obs);
    }
}

#[test]
fn coarse_and_fine_grids_share_the_fine_path() {
    // Draws are taken per fine step, so equal fine steps give equal paths.
    let model = ModelSpec::Cir(CirSpec::default());
    let start = model.start_state(0.5).unwrap();
    let coarse = model.simulate(start, &SamplingGrid::new(22.0, 80, 50).unwrap(), 4).unwrap();
    let fine = model.simulate(start, &SamplingGrid::new(22.0, 400, 10).unwrap(), 4).unwrap();
    assert_eq!(coarse.v_fine, fine.v_fine);
    for (i, x) in coarse.x_obs.iter().enumerate() {
        assert!((x - fine.x_obs[5 * i]).abs() < 1e-12);
    }
}
