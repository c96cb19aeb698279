use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn volocc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volocc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = volocc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn columns(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .to_string()
}

const SMALL_MC: &str = "model.kind = cir\ngrid.horizon = 5\ngrid.n = 80\ngrid.substeps = 5\n\
                        block.k_n = 20\nmc.replicas = 12\n";

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let est = dir.path().join("est");
    ok(&["simulate", "--set", "grid.horizon=3", "--seed", "5", "--out", sim.to_str().unwrap()]);
    assert_eq!(columns(&sim.join("path.csv")), "time,price");
    assert_eq!(columns(&sim.join("variance.csv")), "time,v_true");

    let input = sim.join("path.csv");
    ok(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--kn",
        "20",
        "--trunc",
        "daily-bv",
        "--out",
        est.to_str().unwrap(),
    ]);
    assert_eq!(columns(&est.join("spotvol.csv")), "block_index,t_start,v_hat_star,v_hat,threshold_used");
    assert_eq!(columns(&est.join("occupation.csv")), "level,cumulative_time");
    let quantiles = fs::read_to_string(est.join("quantiles.csv")).unwrap();
    assert!(quantiles.contains("# trunc.kind = daily_bv"));
    assert_eq!(quantiles.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn mc_report_columns_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("panel.cfg");
    fs::write(&cfg, SMALL_MC).unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&[
            "mc",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        fs::read(out.join("mc_report.csv")).unwrap()
    };
    let first = run("a", "1");
    assert_eq!(first, run("b", "1"));
    assert_eq!(first, run("c", "3"));
    assert_eq!(
        columns(&dir.path().join("a/mc_report.csv")),
        "model,n,k_n,p0,alpha,true_mean,bias,mad,stderr,replicas,seed"
    );
}

#[test]
fn evt_rates_and_density_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "evt", "--set", "model.kind=const_vol", "--set", "grid.n=400", "--set", "grid.substeps=1",
        "--trunc", "none", "--set", "mc.replicas=20", "--out", out,
    ]);
    assert_eq!(columns(&dir.path().join("evt.csv")), "replica,M_n,normalized");

    ok(&[
        "rates", "--set", "model.kind=const_vol", "--set", "rates.ladder=40,80,160", "--set",
        "rates.fine_per_day=160", "--set", "mc.replicas=5", "--out", out,
    ]);
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(columns(&dir.path().join("rates.csv")), "n,delta_n,mean_eta");
    assert!(rates.lines().last().unwrap().starts_with("slope,,"));

    ok(&[
        "density", "--set", "grid.horizon=3", "--kernel", "epanechnikov", "--bandwidth", "0.2",
        "--points", "50", "--out", out,
    ]);
    let density = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(density.contains("# density.bandwidth = 0.2"));
    assert_eq!(density.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn unknown_keys_fail_with_a_listing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model.kind = cir\nmodel.kapa = 0.1\ngrid.nn = 80\n").unwrap();
    let out = volocc(&["mc", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.kapa") && err.contains("grid.nn"), "{err}");
    assert!(!dir.path().join("mc_report.csv").exists());
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("prices.csv");
    fs::write(&input, "time,price\n0,1\n1,1\n3,1\n").unwrap();
    let out = volocc(&["estimate", "--input", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("equispaced"));

    let out = volocc(&["estimate", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
}
