//! CSV readers and writers.
//!
//! Every writer takes a config echo which is emitted first as `# key = value`
//! comment lines, so output files are self-describing.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::SamplingGrid;
use crate::harness::{EvtReport, McReport, RateReport};
use crate::occupation::OccupationCurve;
use crate::sim::SamplePath;
use crate::spotvol::SpotVolSeries;

pub type Echo = [(String, String)];

fn header<W: Write>(w: &mut W, echo: &Echo, columns: &str) -> Result<()> {
    for (k, v) in echo {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{columns}")?;
    Ok(())
}

pub fn write_path_csv<W: Write>(w: &mut W, path: &SamplePath, echo: &Echo) -> Result<()> {
    header(w, echo, "time,price")?;
    for (i, x) in path.x_obs.iter().enumerate() {
        writeln!(w, "{},{}", path.grid.obs_time(i), x)?;
    }
    Ok(())
}

pub fn write_variance_csv<W: Write>(w: &mut W, path: &SamplePath, echo: &Echo) -> Result<()> {
    header(w, echo, "time,v_true")?;
    for (t, v) in path.fine_times().zip(&path.v_fine) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn write_spotvol_csv<W: Write>(w: &mut W, series: &SpotVolSeries, echo: &Echo) -> Result<()> {
    header(w, echo, "block_index,t_start,v_hat_star,v_hat,threshold_used")?;
    for i in 0..series.n_blocks() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i, series.block_start_times[i], series.v_hat_star[i], series.v_hat[i], series.threshold_used[i]
        )?;
    }
    Ok(())
}

pub fn write_occupation_csv<W: Write>(w: &mut W, curve: &OccupationCurve, echo: &Echo) -> Result<()> {
    header(w, echo, "level,cumulative_time")?;
    for (v, c) in curve.levels().iter().zip(curve.cumulative()) {
        writeln!(w, "{v},{c}")?;
    }
    Ok(())
}

pub fn write_quantiles_csv<W: Write>(w: &mut W, quantiles: &[(f64, f64)], echo: &Echo) -> Result<()> {
    header(w, echo, "alpha_frac,q_hat")?;
    for (a, q) in quantiles {
        writeln!(w, "{a},{q}")?;
    }
    Ok(())
}

pub fn write_density_csv<W: Write>(w: &mut W, xs: &[f64], fs: &[f64], echo: &Echo) -> Result<()> {
    header(w, echo, "x,f_hat")?;
    for (x, f) in xs.iter().zip(fs) {
        writeln!(w, "{x},{f}")?;
    }
    Ok(())
}

pub fn write_mc_report<W: Write>(w: &mut W, report: &McReport) -> Result<()> {
    let c = &report.config;
    header(w, &c.echo(), "model,n,k_n,p0,alpha,true_mean,bias,mad,stderr,replicas,seed")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.model.name(),
            c.grid.n_per_day(),
            c.block.k_n,
            c.start_quantile,
            r.alpha,
            r.true_mean,
            r.bias,
            r.mad,
            r.mc_stderr,
            r.n_replicas,
            c.base_seed
        )?;
    }
    Ok(())
}

pub fn write_evt_csv<W: Write>(w: &mut W, report: &EvtReport, echo: &Echo) -> Result<()> {
    let mut echo = echo.to_vec();
    echo.push(("evt.b_n".into(), report.b_n.to_string()));
    echo.push(("evt.ks".into(), report.ks.to_string()));
    echo.push(("evt.median".into(), report.median.to_string()));
    header(w, &echo, "replica,M_n,normalized")?;
    for (i, (m, z)) in report.maxima.iter().zip(&report.normalized).enumerate() {
        writeln!(w, "{i},{m},{z}")?;
    }
    Ok(())
}

/// Rate table followed by a `slope,,<value>` row.
pub fn write_rates_csv<W: Write>(w: &mut W, report: &RateReport) -> Result<()> {
    header(w, &report.config.echo(), "n,delta_n,mean_eta")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", r.n, r.delta_n, r.mean_eta)?;
    }
    writeln!(w, "slope,,{}", report.slope)?;
    Ok(())
}

/// Observed prices on an equispaced grid.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    pub grid: SamplingGrid,
    pub start_time: f64,
    pub prices: Vec<f64>,
}

/// Reads a `time,price` CSV. Lines starting with `#` are skipped. Times must
/// increase with constant spacing (relative tolerance 1e-6).
pub fn read_price_csv<R: BufRead>(reader: R) -> Result<PriceSeries> {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["time", "price"] {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected header `time,price`, found `{trimmed}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut parts = trimmed.split(',').map(str::trim);
        let parse = |s: Option<&str>, what: &str| -> Result<f64> {
            s.ok_or_else(|| Error::Parse { line: line_no, msg: format!("missing {what}") })?
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: line_no, msg: format!("bad {what}: {e}") })
        };
        let t = parse(parts.next(), "time")?;
        let x = parse(parts.next(), "price")?;
        if parts.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "expected two columns".into() });
        }
        rows.push((t, x));
    }
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 prices, got {}", rows.len())));
    }
    let start = rows[0].0;
    let n = rows.len() - 1;
    let delta = (rows[n].0 - start) / n as f64;
    if !(delta > 0.0) {
        return Err(Error::Parse { line: 0, msg: "times must increase".into() });
    }
    for (i, w) in rows.windows(2).enumerate() {
        let gap = w[1].0 - w[0].0;
        if !(gap > 0.0) {
            return Err(Error::Parse { line: i + 2, msg: "times must be strictly increasing".into() });
        }
        if (gap - delta).abs() > 1e-6 * delta {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("times are not equispaced: gap {gap} vs mean spacing {delta}"),
            });
        }
    }
    let grid = SamplingGrid::from_mesh(n as f64 * delta, delta, 1)?;
    Ok(PriceSeries {
        grid,
        start_time: start,
        prices: rows.into_iter().map(|(_, x)| x).collect(),
    })
}
