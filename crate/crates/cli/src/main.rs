use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use volocc::density::{kernel_density, KernelDensity};
use volocc::harness::{
    grid_echo, model_echo, run_evt, run_mc, run_rate_study, trunc_echo, KeyValues, McConfig,
};
use volocc::io;
use volocc::occupation::occupation_curve;
use volocc::seed::replica_seed;
use volocc::sim::SamplePath;
use volocc::spotvol::{spot_variance_blocks, BlockSpec, Estimate};
use volocc::SamplingGrid;

#[derive(Parser)]
#[command(name = "volocc", version, about = "Volatility occupation time estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path; writes path.csv and variance.csv.
    Simulate(Common),
    /// Estimate spot variance and occupation time from a price CSV.
    Estimate(Common),
    /// Quantile bias/MAD study; writes mc_report.csv.
    Mc(Common),
    /// Extreme-value study under constant volatility; writes evt.csv.
    Evt(Common),
    /// Sup-error rate study; writes rates.csv.
    Rates(Common),
    /// Kernel occupation density of a price CSV or a simulated path.
    Density(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Price CSV with header `time,price`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Base seed (`mc.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (`mc.workers`).
    #[arg(long)]
    workers: Option<usize>,
    /// Block size (`block.k_n`).
    #[arg(long)]
    kn: Option<usize>,
    /// Truncation rule (`trunc.kind`).
    #[arg(long)]
    trunc: Option<String>,
    /// Density kernel (`density.kernel`).
    #[arg(long)]
    kernel: Option<String>,
    /// Density bandwidth (`density.bandwidth`).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Number of density evaluation points (`density.points`).
    #[arg(long)]
    points: Option<usize>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn keys(&self) -> Result<KeyValues> {
        let mut kv = match &self.config {
            Some(path) => fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?
                .parse::<KeyValues>()
                .with_context(|| format!("in {}", path.display()))?,
            None => KeyValues::default(),
        };
        for item in &self.overrides {
            let Some((k, v)) = item.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{item}`");
            };
            kv.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            kv.set("mc.seed", seed.to_string())?;
        }
        if let Some(w) = self.workers {
            kv.set("mc.workers", w.to_string())?;
        }
        if let Some(k) = self.kn {
            kv.unset("block.gamma");
            kv.set("block.k_n", k.to_string())?;
        }
        if let Some(t) = &self.trunc {
            kv.set("trunc.kind", t.as_str())?;
        }
        if let Some(k) = &self.kernel {
            kv.set("density.kernel", k.as_str())?;
        }
        if let Some(h) = self.bandwidth {
            kv.set("density.bandwidth", h.to_string())?;
        }
        if let Some(n) = self.points {
            kv.set("density.points", n.to_string())?;
        }
        Ok(kv)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn read_prices(&self) -> Result<Option<io::PriceSeries>> {
        self.input
            .as_deref()
            .map(|path: &Path| {
                let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
                io::read_price_csv(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
            })
            .transpose()
    }
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

type Echo = Vec<(String, String)>;

/// Replica 0 of the configured experiment.
fn simulate_one(mc: &McConfig) -> Result<(SamplePath, Echo)> {
    let start = mc.model.start_state(mc.start_quantile)?;
    let path = mc.model.simulate(start, &mc.grid, replica_seed(mc.base_seed, 0))?;
    let mut echo = model_echo(&mc.model);
    echo.extend(grid_echo(&mc.grid));
    echo.push(("mc.start_quantile".into(), mc.start_quantile.to_string()));
    echo.push(("mc.seed".into(), mc.base_seed.to_string()));
    Ok((path, echo))
}

/// Prices and grid from `--input`, or one simulated path.
fn observed_prices(args: &Common, kv: &KeyValues) -> Result<(Vec<f64>, SamplingGrid, Echo)> {
    if let Some(series) = args.read_prices()? {
        let mut echo = vec![("input".to_string(), args.input.as_ref().unwrap().display().to_string())];
        echo.extend(grid_echo(&series.grid));
        return Ok((series.prices, series.grid, echo));
    }
    let mc = kv.mc()?;
    let (path, echo) = simulate_one(&mc)?;
    Ok((path.x_obs, mc.grid, echo))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let kv = args.keys()?;
            let mc = kv.mc()?;
            let (path, echo) = simulate_one(&mc)?;
            let mut w = args.create("path.csv")?;
            io::write_path_csv(&mut w, &path, &echo)?;
            finish(w)?;
            let mut w = args.create("variance.csv")?;
            io::write_variance_csv(&mut w, &path, &echo)?;
            finish(w)?;
            println!("simulated {} observations", mc.grid.n_obs());
        }
        Command::Estimate(args) => {
            let kv = args.keys()?;
            let Some(series) = args.read_prices()? else {
                bail!("estimate needs --input <prices.csv>");
            };
            let grid = series.grid;
            let block = kv.block(&grid)?;
            let trunc = kv.trunc()?;
            let alphas = kv.mc()?.alphas;
            let spot = spot_variance_blocks(&series.prices, &grid, &block, &trunc)?;
            let curve = occupation_curve(&spot, Estimate::Truncated)?;
            let quantiles = alphas
                .iter()
                .map(|&a| Ok((a, curve.quantile(a)?)))
                .collect::<volocc::Result<Vec<_>>>()?;
            let mut echo = vec![("input".to_string(), args.input.as_ref().unwrap().display().to_string())];
            echo.extend(grid_echo(&grid));
            echo.push(("block.k_n".into(), block.k_n.to_string()));
            echo.extend(trunc_echo(&trunc));
            let mut w = args.create("spotvol.csv")?;
            io::write_spotvol_csv(&mut w, &spot, &echo)?;
            finish(w)?;
            let mut w = args.create("occupation.csv")?;
            io::write_occupation_csv(&mut w, &curve, &echo)?;
            finish(w)?;
            let mut w = args.create("quantiles.csv")?;
            io::write_quantiles_csv(&mut w, &quantiles, &echo)?;
            finish(w)?;
            println!("estimated {} blocks", spot.n_blocks());
        }
        Command::Mc(args) => {
            let report = run_mc(&args.keys()?.mc()?)?;
            let mut w = args.create("mc_report.csv")?;
            io::write_mc_report(&mut w, &report)?;
            finish(w)?;
            for r in &report.rows {
                println!("alpha {}: true {:.4} bias {:.4} mad {:.4}", r.alpha, r.true_mean, r.bias, r.mad);
            }
        }
        Command::Evt(args) => {
            let kv = args.keys()?;
            let mut mc = kv.mc()?;
            if !kv.contains("block.k_n") && !kv.contains("block.gamma") {
                mc.block = BlockSpec::from_gamma(&mc.grid, 0.5)?;
            }
            let report = run_evt(&mc)?;
            let mut w = args.create("evt.csv")?;
            io::write_evt_csv(&mut w, &report, &mc.echo())?;
            finish(w)?;
            println!("ks {:.4} median {:.4}", report.ks, report.median);
        }
        Command::Rates(args) => {
            let report = run_rate_study(&args.keys()?.rate_study()?)?;
            let mut w = args.create("rates.csv")?;
            io::write_rates_csv(&mut w, &report)?;
            finish(w)?;
            println!("slope {:.4}", report.slope);
        }
        Command::Density(args) => {
            let kv = args.keys()?;
            let (prices, grid, mut echo) = observed_prices(&args, &kv)?;
            let block = kv.block(&grid)?;
            let trunc = kv.trunc()?;
            let spec = kv.kernel(grid.delta_n())?;
            let spot = spot_variance_blocks(&prices, &grid, &block, &trunc)?;
            let curve = occupation_curve(&spot, Estimate::Truncated)?;
            let fit = KernelDensity::from_curve(&curve, spec)?;
            let xs = fit.default_grid(kv.density_points()?);
            let fs = kernel_density(&spot, Estimate::Truncated, &spec, &xs)?;
            echo.push(("block.k_n".into(), block.k_n.to_string()));
            echo.extend(trunc_echo(&trunc));
            echo.push(("density.kernel".into(), spec.kernel.name().to_string()));
            echo.push(("density.bandwidth".into(), spec.bandwidth.to_string()));
            let mut w = args.create("density.csv")?;
            io::write_density_csv(&mut w, &xs, &fs, &echo)?;
            finish(w)?;
            println!("density on {} points, bandwidth {:.4}", xs.len(), spec.bandwidth);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
