//! Flat `key = value` configuration files.
//!
//! Blank lines and text after `#` are ignored. Keys are grouped by prefix:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `model.kind` | `cir`, `levy_ou` or `const_vol` | `cir` |
//! | `model.kappa`, `model.theta`, `model.sigma_v`, `model.drift` | square-root parameters | 0.03, 1, 0.2, 0 |
//! | `model.lambda`, `model.gauss_var`, `model.jump_scale`, `model.jump_tempering`, `model.jump_index`, `model.eps_cut` | log-vol OU parameters | 0.03, 1, 2.33, 2, 0.5, 1e-4 |
//! | `model.clock` | `marginal` or `unscaled` | `marginal` |
//! | `model.link` | `variance` (spot variance `e^{Y-1}`) or `volatility` | `variance` |
//! | `model.v` | constant variance | 1 |
//! | `model.jump_rate`, `model.jump_law`, `model.jump_size`, `model.jump_mean`, `model.jump_sd` | price jumps (`symmetric` or `normal` law) | none |
//! | `grid.horizon`, `grid.n`, `grid.substeps` | days, observations per day, fine steps per observation | 22, 80, 10 |
//! | `block.k_n` or `block.gamma` | block size, or `k_n = round(Δn^{-γ})` | 20 |
//! | `trunc.kind` | `none`, `fixed`, `global_bv`, `daily_bv`, `local_bipower` | `daily_bv` |
//! | `trunc.c`, `trunc.varpi`, `trunc.clamp`, `trunc.log_scaled` | threshold settings | 3, 0.49, 10, false |
//! | `mc.start_quantile`, `mc.alphas`, `mc.replicas`, `mc.seed`, `mc.workers` | Monte Carlo settings | 0.5, `0.25,0.5,0.75`, 1000, 1, all cores |
//! | `rates.ladder`, `rates.gamma`, `rates.fine_per_day` | rate study ladder | `40,80,160,320,640,1280`, 0.5, 2560 |
//! | `density.kernel`, `density.bandwidth`, `density.beta`, `density.points` | occupation density | `gaussian`, `Δn^{1/(4(2+β))}`, 0.5, 200 |
//!
//! Replica `i` is simulated from `replica_seed(mc.seed, i)`, a SplitMix64
//! hash of the pair, so replicas are independent of scheduling.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::density::{default_bandwidth, Kernel, KernelSpec};
use crate::error::{config_err, Error, Result};
use crate::grid::SamplingGrid;
use crate::sim::{
    BdlpClock, CirSpec, ConstVolSpec, JumpSize, LevyOuSpec, ModelSpec, PriceJumps, VolLink,
};
use crate::spotvol::{BlockSpec, Multiplier, TruncationSpec};

const CIR_KEYS: &[&str] = &["model.kappa", "model.theta", "model.sigma_v", "model.drift"];
const LEVY_KEYS: &[&str] = &[
    "model.lambda",
    "model.gauss_var",
    "model.jump_scale",
    "model.jump_tempering",
    "model.jump_index",
    "model.eps_cut",
    "model.clock",
    "model.link",
];
const CONST_KEYS: &[&str] = &[
    "model.v",
    "model.jump_rate",
    "model.jump_law",
    "model.jump_size",
    "model.jump_mean",
    "model.jump_sd",
];
const OTHER_KEYS: &[&str] = &[
    "model.kind",
    "grid.horizon",
    "grid.n",
    "grid.substeps",
    "block.k_n",
    "block.gamma",
    "trunc.kind",
    "trunc.c",
    "trunc.varpi",
    "trunc.clamp",
    "trunc.log_scaled",
    "mc.start_quantile",
    "mc.alphas",
    "mc.replicas",
    "mc.seed",
    "mc.workers",
    "rates.ladder",
    "rates.gamma",
    "rates.fine_per_day",
    "density.kernel",
    "density.bandwidth",
    "density.beta",
    "density.points",
];

fn is_known(key: &str) -> bool {
    [CIR_KEYS, LEVY_KEYS, CONST_KEYS, OTHER_KEYS]
        .iter()
        .any(|set| set.contains(&key))
}

/// Parsed `key = value` pairs, validated against the key reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl FromStr for KeyValues {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        let mut unknown = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !is_known(key) {
                unknown.push(key.to_string());
                continue;
            }
            if kv.entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        if !unknown.is_empty() {
            return Err(config_err(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(kv)
    }
}

impl KeyValues {
    /// Sets or replaces a key, rejecting names outside the reference.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !is_known(key) {
            return Err(config_err(format!("unknown keys: {key}")));
        }
        self.entries.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn unset(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| config_err(format!("{key} = {v}: {e}"))))
            .transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<T>()
                            .map_err(|e| config_err(format!("{key} = {v}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn kind(&self, key: &str, default: &str) -> String {
        self.get_str(key).unwrap_or(default).to_ascii_lowercase().replace('-', "_")
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let kind = self.kind("model.kind", "cir");
        let allowed: &[&str] = match kind.as_str() {
            "cir" => CIR_KEYS,
            "levy_ou" => LEVY_KEYS,
            "const_vol" => CONST_KEYS,
            other => return Err(config_err(format!("model.kind: unknown model `{other}`"))),
        };
        let stray: Vec<&str> = [CIR_KEYS, LEVY_KEYS, CONST_KEYS]
            .concat()
            .into_iter()
            .filter(|k| self.contains(k) && !allowed.contains(k))
            .collect();
        if !stray.is_empty() {
            return Err(config_err(format!(
                "keys not used by model.kind = {kind}: {}",
                stray.join(", ")
            )));
        }
        let model = match kind.as_str() {
            "cir" => {
                let d = CirSpec::default();
                ModelSpec::Cir(CirSpec {
                    kappa: self.get_or("model.kappa", d.kappa)?,
                    theta: self.get_or("model.theta", d.theta)?,
                    sigma_v: self.get_or("model.sigma_v", d.sigma_v)?,
                    drift_x: self.get_or("model.drift", d.drift_x)?,
                })
            }
            "levy_ou" => {
                let d = LevyOuSpec::default();
                let clock = match self.kind("model.clock", "marginal").as_str() {
                    "marginal" => BdlpClock::Marginal,
                    "unscaled" => BdlpClock::Unscaled,
                    other => return Err(config_err(format!("model.clock: unknown value `{other}`"))),
                };
                let link = match self.kind("model.link", "variance").as_str() {
                    "variance" => VolLink::Variance,
                    "volatility" => VolLink::Volatility,
                    other => return Err(config_err(format!("model.link: unknown value `{other}`"))),
                };
                ModelSpec::LevyOuLogVol(LevyOuSpec {
                    lambda: self.get_or("model.lambda", d.lambda)?,
                    gauss_var_marginal: self.get_or("model.gauss_var", d.gauss_var_marginal)?,
                    jump_scale: self.get_or("model.jump_scale", d.jump_scale)?,
                    jump_tempering: self.get_or("model.jump_tempering", d.jump_tempering)?,
                    jump_index: self.get_or("model.jump_index", d.jump_index)?,
                    eps_cut: self.get_or("model.eps_cut", d.eps_cut)?,
                    clock,
                    link,
                })
            }
            _ => {
                let mut spec = ConstVolSpec::new(self.get_or("model.v", 1.0)?);
                if let Some(rate) = self.get::<f64>("model.jump_rate")? {
                    let size = match self.kind("model.jump_law", "symmetric").as_str() {
                        "symmetric" => JumpSize::Symmetric(self.get_or("model.jump_size", 0.5)?),
                        "normal" => JumpSize::Normal {
                            mean: self.get_or("model.jump_mean", 0.0)?,
                            sd: self.get_or("model.jump_sd", 0.5)?,
                        },
                        other => {
                            return Err(config_err(format!("model.jump_law: unknown value `{other}`")))
                        }
                    };
                    spec.price_jumps = Some(PriceJumps { rate, size });
                }
                ModelSpec::ConstVol(spec)
            }
        };
        model.validate()?;
        Ok(model)
    }

    pub fn grid(&self) -> Result<SamplingGrid> {
        SamplingGrid::new(
            self.get_or("grid.horizon", 22.0)?,
            self.get_or("grid.n", 80)?,
            self.get_or("grid.substeps", 10)?,
        )
    }

    pub fn block(&self, grid: &SamplingGrid) -> Result<BlockSpec> {
        match (self.get::<usize>("block.k_n")?, self.get::<f64>("block.gamma")?) {
            (Some(_), Some(_)) => Err(config_err("set only one of block.k_n and block.gamma")),
            (Some(k), None) => BlockSpec::new(k),
            (None, Some(g)) => BlockSpec::from_gamma(grid, g),
            (None, None) => BlockSpec::new(20),
        }
    }

    pub fn trunc(&self) -> Result<TruncationSpec> {
        let c = Multiplier {
            c: self.get_or("trunc.c", 3.0)?,
            log_scaled: self.get_or("trunc.log_scaled", false)?,
        };
        let varpi = self.get_or("trunc.varpi", 0.49)?;
        let spec = match self.kind("trunc.kind", "daily_bv").as_str() {
            "none" => TruncationSpec::None,
            "fixed" => TruncationSpec::Fixed { alpha: c, varpi },
            "global_bv" => TruncationSpec::GlobalBv { c, varpi },
            "daily_bv" => TruncationSpec::DailyBv { c, varpi },
            "local_bipower" => TruncationSpec::LocalBipower {
                c,
                varpi,
                clamp: self.get_or("trunc.clamp", 10.0)?,
            },
            other => return Err(config_err(format!("trunc.kind: unknown rule `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kernel(&self, delta_n: f64) -> Result<KernelSpec> {
        let kernel = match self.kind("density.kernel", "gaussian").as_str() {
            "gaussian" => Kernel::Gaussian,
            "epanechnikov" | "smooth_epanechnikov" => Kernel::SmoothEpanechnikov,
            other => return Err(config_err(format!("density.kernel: unknown kernel `{other}`"))),
        };
        let beta: f64 = self.get_or("density.beta", 0.5)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(config_err(format!("density.beta must be positive, got {beta}")));
        }
        let spec = KernelSpec {
            kernel,
            bandwidth: self.get_or("density.bandwidth", default_bandwidth(delta_n, beta))?,
            beta_hint: beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn density_points(&self) -> Result<usize> {
        let n = self.get_or("density.points", 200)?;
        if n < 2 {
            return Err(config_err("density.points must be at least 2"));
        }
        Ok(n)
    }

    pub fn mc(&self) -> Result<McConfig> {
        let grid = self.grid()?;
        let config = McConfig {
            model: self.model()?,
            block: self.block(&grid)?,
            grid,
            trunc: self.trunc()?,
            start_quantile: self.get_or("mc.start_quantile", 0.5)?,
            alphas: self.get_list("mc.alphas")?.unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
            n_replicas: self.get_or("mc.replicas", 1000)?,
            base_seed: self.get_or("mc.seed", 1)?,
            workers: self.get_or("mc.workers", default_workers())?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn rate_study(&self) -> Result<RateStudyConfig> {
        let mc = self.mc()?;
        let config = RateStudyConfig {
            model: mc.model,
            horizon: mc.grid.horizon(),
            ladder: self
                .get_list("rates.ladder")?
                .unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
            gamma: self.get_or("rates.gamma", 0.5)?,
            fine_per_day: self.get_or("rates.fine_per_day", 2560)?,
            start_quantile: mc.start_quantile,
            n_replicas: mc.n_replicas,
            base_seed: mc.base_seed,
            workers: mc.workers,
        };
        config.validate()?;
        Ok(config)
    }
}

pub const DEFAULT_LADDER: [usize; 6] = [40, 80, 160, 320, 640, 1280];

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub model: ModelSpec,
    pub grid: SamplingGrid,
    pub block: BlockSpec,
    pub trunc: TruncationSpec,
    /// Invariant-law quantile of the starting state.
    pub start_quantile: f64,
    /// Quantile levels as fractions of the horizon.
    pub alphas: Vec<f64>,
    pub n_replicas: usize,
    pub base_seed: u64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl McConfig {
    pub fn new(model: ModelSpec, grid: SamplingGrid, k_n: usize) -> Result<Self> {
        Ok(Self {
            model,
            grid,
            block: BlockSpec::new(k_n)?,
            trunc: TruncationSpec::daily_bv_default(),
            start_quantile: 0.5,
            alphas: vec![0.25, 0.5, 0.75],
            n_replicas: 1000,
            base_seed: 1,
            workers: default_workers(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.trunc.validate()?;
        self.block.n_blocks(&self.grid)?;
        if self.n_replicas == 0 {
            return Err(config_err("mc.replicas must be at least 1"));
        }
        if self.workers == 0 {
            return Err(config_err("mc.workers must be at least 1"));
        }
        if !(self.start_quantile > 0.0 && self.start_quantile < 1.0) {
            return Err(config_err(format!(
                "mc.start_quantile must lie in (0, 1), got {}",
                self.start_quantile
            )));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(config_err("mc.alphas must be a non-empty list inside (0, 1)"));
        }
        Ok(())
    }

    /// Resolved settings for output headers. Worker count is left out since
    /// it never affects results.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut e = model_echo(&self.model);
        e.extend(grid_echo(&self.grid));
        e.push(("block.k_n".into(), self.block.k_n.to_string()));
        e.extend(trunc_echo(&self.trunc));
        e.push(("mc.start_quantile".into(), self.start_quantile.to_string()));
        e.push(("mc.alphas".into(), join(&self.alphas)));
        e.push(("mc.replicas".into(), self.n_replicas.to_string()));
        e.push(("mc.seed".into(), self.base_seed.to_string()));
        e
    }
}

/// Convergence study of the sup-error along a ladder of sampling frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudyConfig {
    pub model: ModelSpec,
    pub horizon: f64,
    /// Observations per day.
    pub ladder: Vec<usize>,
    pub gamma: f64,
    /// Fine simulation steps per day, shared by every rung so the truth has
    /// the same resolution throughout. Must be a multiple of each rung.
    pub fine_per_day: usize,
    pub start_quantile: f64,
    pub n_replicas: usize,
    pub base_seed: u64,
    pub workers: usize,
}

impl RateStudyConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            horizon: 22.0,
            ladder: DEFAULT_LADDER.to_vec(),
            gamma: 0.5,
            fine_per_day: 2560,
            start_quantile: 0.5,
            n_replicas: 200,
            base_seed: 1,
            workers: default_workers(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.ladder.len() < 3 {
            return Err(config_err(format!(
                "rates.ladder needs at least 3 frequencies, got {}",
                self.ladder.len()
            )));
        }
        if let Some(n) = self.ladder.iter().find(|&&n| n == 0 || !self.fine_per_day.is_multiple_of(n)) {
            return Err(config_err(format!(
                "rates.fine_per_day = {} is not a multiple of ladder entry {n}",
                self.fine_per_day
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(config_err(format!("rates.gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.n_replicas == 0 || self.workers == 0 {
            return Err(config_err("replica and worker counts must be at least 1"));
        }
        if !(self.start_quantile > 0.0 && self.start_quantile < 1.0) {
            return Err(config_err("mc.start_quantile must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        let mut e = model_echo(&self.model);
        e.push(("grid.horizon".into(), self.horizon.to_string()));
        e.push(("rates.ladder".into(), join(&self.ladder)));
        e.push(("rates.gamma".into(), self.gamma.to_string()));
        e.push(("rates.fine_per_day".into(), self.fine_per_day.to_string()));
        e.push(("mc.start_quantile".into(), self.start_quantile.to_string()));
        e.push(("mc.replicas".into(), self.n_replicas.to_string()));
        e.push(("mc.seed".into(), self.base_seed.to_string()));
        e
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn pair(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub fn model_echo(model: &ModelSpec) -> Vec<(String, String)> {
    let mut e = vec![pair("model.kind", model.name())];
    match model {
        ModelSpec::Cir(s) => e.extend([
            pair("model.kappa", s.kappa),
            pair("model.theta", s.theta),
            pair("model.sigma_v", s.sigma_v),
            pair("model.drift", s.drift_x),
        ]),
        ModelSpec::LevyOuLogVol(s) => e.extend([
            pair("model.lambda", s.lambda),
            pair("model.gauss_var", s.gauss_var_marginal),
            pair("model.jump_scale", s.jump_scale),
            pair("model.jump_tempering", s.jump_tempering),
            pair("model.jump_index", s.jump_index),
            pair("model.eps_cut", s.eps_cut),
            pair("model.clock", match s.clock {
                BdlpClock::Marginal => "marginal",
                BdlpClock::Unscaled => "unscaled",
            }),
            pair("model.link", match s.link {
                VolLink::Variance => "variance",
                VolLink::Volatility => "volatility",
            }),
        ]),
        ModelSpec::ConstVol(s) => {
            e.push(pair("model.v", s.v));
            if let Some(j) = &s.price_jumps {
                e.push(pair("model.jump_rate", j.rate));
                match j.size {
                    JumpSize::Symmetric(size) => {
                        e.push(pair("model.jump_law", "symmetric"));
                        e.push(pair("model.jump_size", size));
                    }
                    JumpSize::Normal { mean, sd } => {
                        e.push(pair("model.jump_law", "normal"));
                        e.push(pair("model.jump_mean", mean));
                        e.push(pair("model.jump_sd", sd));
                    }
                }
            }
        }
    }
    e
}

pub fn grid_echo(grid: &SamplingGrid) -> Vec<(String, String)> {
    vec![
        pair("grid.horizon", grid.horizon()),
        pair("grid.n", grid.n_per_day()),
        pair("grid.substeps", grid.substeps()),
    ]
}

pub fn trunc_echo(trunc: &TruncationSpec) -> Vec<(String, String)> {
    let mut e = vec![pair("trunc.kind", trunc.name())];
    let (c, varpi) = match *trunc {
        TruncationSpec::None => return e,
        TruncationSpec::Fixed { alpha, varpi } => (alpha, varpi),
        TruncationSpec::GlobalBv { c, varpi } | TruncationSpec::DailyBv { c, varpi } => (c, varpi),
        TruncationSpec::LocalBipower { c, varpi, clamp } => {
            e.push(pair("trunc.clamp", clamp));
            (c, varpi)
        }
    };
    e.push(pair("trunc.c", c.c));
    e.push(pair("trunc.varpi", varpi));
    e.push(pair("trunc.log_scaled", c.log_scaled));
    e
}
