//! Quantiles of the invariant (stationary) law of each model's variance.
//!
//! The OU state's stationary law is Gaussian convolved with a centred
//! tempered-stable law, whose characteristic function is closed form; its
//! distribution function is recovered by Gil-Pelaez inversion.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::gamma;

use super::{BdlpClock, LevyOuSpec, ModelSpec};
use crate::error::{config_err, Error, Result};

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// `p`-quantile of the stationary spot-variance law.
pub fn invariant_quantile(spec: &ModelSpec, p: f64) -> Result<f64> {
    check_probability(p)?;
    spec.validate()?;
    match spec {
        ModelSpec::Cir(s) => {
            let (shape, scale) = s
                .invariant_gamma()
                .ok_or_else(|| config_err("CIR invariant law needs kappa > 0 and sigma_v > 0"))?;
            let law = Gamma::new(shape, 1.0 / scale).map_err(|e| config_err(e.to_string()))?;
            Ok(law.inverse_cdf(p))
        }
        ModelSpec::LevyOuLogVol(s) => Ok(s.link.variance(ou_state_quantile(s, p)?)),
        ModelSpec::ConstVol(s) => Ok(s.v),
    }
}

fn cache() -> &'static Mutex<HashMap<[u64; 7], f64>> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 7], f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `p`-quantile of the OU state's stationary law. Cached per spec.
pub fn ou_state_quantile(spec: &LevyOuSpec, p: f64) -> Result<f64> {
    check_probability(p)?;
    spec.validate()?;
    let key = [
        spec.lambda.to_bits(),
        spec.gauss_var_marginal.to_bits(),
        spec.jump_scale.to_bits(),
        spec.jump_tempering.to_bits(),
        spec.jump_index.to_bits(),
        (spec.clock == BdlpClock::Unscaled) as u64,
        p.to_bits(),
    ];
    if let Some(&q) = cache().lock().expect("cache lock").get(&key) {
        return Ok(q);
    }
    let law = StationaryOu::new(spec);
    let q = law.quantile(p)?;
    cache().lock().expect("cache lock").insert(key, q);
    Ok(q)
}

/// Stationary law of the OU state, described by its log-characteristic function.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StationaryOu {
    gauss_var: f64,
    a: f64,
    b: f64,
    p: f64,
    gamma_neg_p: f64,
    /// Cumulant multiplier: 1 when the marginal is the configured one.
    mult: f64,
}

impl StationaryOu {
    pub(crate) fn new(spec: &LevyOuSpec) -> Self {
        let mult = match spec.clock {
            BdlpClock::Marginal => 1.0,
            BdlpClock::Unscaled => 1.0 / spec.lambda,
        };
        Self {
            gauss_var: spec.gauss_var_marginal,
            a: spec.jump_scale,
            b: spec.jump_tempering,
            p: spec.jump_index,
            gamma_neg_p: gamma(-spec.jump_index),
            mult,
        }
    }

    /// `log E[e^{iuY}]`.
    fn log_cf(&self, u: f64) -> Complex64 {
        let iu = Complex64::new(0.0, u);
        let gauss = Complex64::new(-0.5 * self.gauss_var * u * u, 0.0);
        let jumps = if self.a > 0.0 {
            // ∫ (e^{iux} - 1 - iux) A e^{-bx} x^{-1-p} dx
            let bracket = (Complex64::new(self.b, 0.0) - iu).powf(self.p) - self.b.powf(self.p)
                + iu * self.p * self.b.powf(self.p - 1.0);
            bracket * (self.a * self.gamma_neg_p)
        } else {
            Complex64::new(0.0, 0.0)
        };
        (gauss + jumps) * self.mult
    }

    pub(crate) fn variance(&self) -> f64 {
        let jump_var = if self.a > 0.0 {
            self.a * gamma(2.0 - self.p) * self.b.powf(self.p - 2.0)
        } else {
            0.0
        };
        (self.gauss_var + jump_var) * self.mult
    }

    /// Upper integration limit beyond which `|φ(u)| < 1e-17`.
    fn cutoff(&self) -> f64 {
        let mut u = 1.0;
        while self.log_cf(u).re > -40.0 && u < 1e7 {
            u *= 1.25;
        }
        u
    }

    /// Gil-Pelaez: `F(y) = 1/2 - (1/π) ∫_0^∞ Im(e^{-iuy} φ(u)) / u du`.
    pub(crate) fn cdf(&self, y: f64) -> f64 {
        let upper = self.cutoff();
        // substitution u = s², which tames both the oscillation at large u
        // for the heavy-tailed case and the integrable behaviour at 0
        let s_max = upper.sqrt();
        let n = 20_000usize;
        let ds = s_max / n as f64;
        let integrand = |s: f64| -> f64 {
            if s == 0.0 {
                return 0.0;
            }
            let u = s * s;
            let phi = (self.log_cf(u) - Complex64::new(0.0, u * y)).exp();
            // du/u = 2 ds / s
            2.0 * phi.im / s
        };
        let mut acc = integrand(0.0) + integrand(s_max);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(k as f64 * ds);
        }
        let integral = acc * ds / 3.0;
        (0.5 - integral / std::f64::consts::PI).clamp(0.0, 1.0)
    }

    pub(crate) fn quantile(&self, p: f64) -> Result<f64> {
        let sd = self.variance().sqrt();
        if sd == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (-sd, sd);
        while self.cdf(lo) > p {
            lo -= 2.0 * sd;
        }
        while self.cdf(hi) < p {
            hi += 2.0 * sd;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 * sd {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
