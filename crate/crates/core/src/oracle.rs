//! Ground truth from the simulated fine-grid variance path, plus the
//! closed-form rate exponents and extreme-value normalisation.

use crate::density::{Kernel, KernelDensity, KernelSpec};
use crate::error::{Error, Result};

fn check_path(v_fine: &[f64], step: f64) -> Result<()> {
    if v_fine.len() < 2 {
        return Err(Error::InsufficientData("oracle path needs at least two nodes".into()));
    }
    if !(step > 0.0) {
        return Err(Error::OutOfRange(format!("fine step must be positive, got {step}")));
    }
    Ok(())
}

/// Left-endpoint Riemann occupation of a fine-grid path, sorted once for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct OracleOccupation {
    sorted: Vec<f64>,
    step: f64,
}

impl OracleOccupation {
    pub fn new(v_fine: &[f64], step: f64) -> Result<Self> {
        check_path(v_fine, step)?;
        let mut sorted = v_fine[..v_fine.len() - 1].to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted, step })
    }

    pub fn total_time(&self) -> f64 {
        self.sorted.len() as f64 * self.step
    }

    /// `F_T(x) ≈ Σ_k step·1{V_k <= x}`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 * self.step
    }

    /// Order statistic at rank `ceil(alpha_frac·count)`.
    pub fn quantile(&self, alpha_frac: f64) -> Result<f64> {
        if !(alpha_frac > 0.0 && alpha_frac < 1.0) {
            return Err(Error::OutOfRange(format!(
                "quantile fraction must lie in (0, 1), got {alpha_frac}"
            )));
        }
        let n = self.sorted.len();
        let rank = ((alpha_frac * n as f64) - 1e-9).ceil().max(1.0) as usize;
        Ok(self.sorted[rank.min(n) - 1])
    }
}

pub fn oracle_occupation(v_fine: &[f64], step: f64, x: f64) -> Result<f64> {
    check_path(v_fine, step)?;
    let n = v_fine.len() - 1;
    Ok(v_fine[..n].iter().filter(|&&v| v <= x).count() as f64 * step)
}

pub fn oracle_quantile(v_fine: &[f64], step: f64, alpha_frac: f64) -> Result<f64> {
    OracleOccupation::new(v_fine, step)?.quantile(alpha_frac)
}

/// Largest single-step move of the fine path.
pub fn fine_grid_modulus(v_fine: &[f64]) -> f64 {
    v_fine.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// `step^{1/5}`.
pub fn reference_bandwidth(step: f64) -> f64 {
    step.powf(0.2)
}

/// Kernel smoother applied to the true path; the reference the block
/// density estimate is compared with. `bandwidth = None` selects
/// [`reference_bandwidth`].
pub fn oracle_density(v_fine: &[f64], step: f64, kernel: Kernel, bandwidth: Option<f64>) -> Result<KernelDensity> {
    check_path(v_fine, step)?;
    let n = v_fine.len() - 1;
    let spec = KernelSpec {
        kernel,
        bandwidth: bandwidth.unwrap_or_else(|| reference_bandwidth(step)),
        beta_hint: 0.5,
    };
    KernelDensity::new(v_fine[..n].to_vec(), vec![step; n], spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// Uniform spot-variance error `η_n`.
    An,
    /// Pointwise occupation-time error with volatility jumps.
    Dn,
    /// Building block of the kernel density rate.
    ABarN,
}

/// Inputs of the rate exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Activity index of price jumps.
    pub r: f64,
    /// Activity index of volatility jumps.
    pub r_tilde: f64,
    /// Block exponent, `k_n ≍ Δn^{-γ}`.
    pub gamma: f64,
    /// Truncation exponent.
    pub varpi: f64,
    pub iota: f64,
    /// Slack used when `r > 1`; ignored otherwise.
    pub theta: f64,
    pub continuous_x: bool,
}

impl RateParams {
    pub fn continuous(gamma: f64, iota: f64) -> Self {
        Self {
            r: 0.0,
            r_tilde: 1.0,
            gamma,
            varpi: 0.49,
            iota,
            theta: 0.0,
            continuous_x: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::RateConstraint(m));
        if !(0.0..=2.0).contains(&self.r) {
            return fail(format!("r = {} must lie in [0, 2]", self.r));
        }
        if !(self.r_tilde > 0.0 && self.r_tilde <= 2.0) {
            return fail(format!("r_tilde = {} must lie in (0, 2]", self.r_tilde));
        }
        if !(self.iota > 0.0) {
            return fail(format!("iota = {} must be positive", self.iota));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma = {} must lie in (0, 1)", self.gamma));
        }
        if self.continuous_x {
            return Ok(());
        }
        let r1 = self.r.max(1.0);
        let varpi_lo = (r1 - 1.0) / (2.0 * r1 - self.r);
        if !(self.varpi > varpi_lo && self.varpi < 0.5) {
            return fail(format!(
                "varpi = {} must lie in ((1∨r - 1)/(2(1∨r) - r), 1/2) = ({varpi_lo}, 0.5)",
                self.varpi
            ));
        }
        let gamma_lo = self.r * self.varpi + r1 * (1.0 - 2.0 * self.varpi);
        if !(self.gamma > gamma_lo) {
            return fail(format!(
                "gamma = {} must exceed r·varpi + (1∨r)(1 - 2 varpi) = {gamma_lo}",
                self.gamma
            ));
        }
        if self.r > 1.0 && !(self.theta > 0.0) {
            return fail(format!("theta = {} must be positive when r > 1", self.theta));
        }
        Ok(())
    }
}

/// Exponent `e` with bound `≍ Δn^e`; larger is faster.
pub fn rate_bound(params: &RateParams, which: RateKind) -> Result<f64> {
    params.validate()?;
    let RateParams { r, r_tilde, gamma, varpi, iota, theta, continuous_x } = *params;
    let sampling = gamma / 2.0;
    let bias = (1.0 - gamma) / 2.0;
    let exponent = match which {
        RateKind::An | RateKind::Dn => {
            let mut e = (sampling - iota).min(bias - iota);
            if !continuous_x {
                let jump_term = if r <= 1.0 {
                    gamma - 1.0 + (2.0 - r) * varpi
                } else {
                    gamma / r - (1.0 - varpi) - iota
                };
                e = e.min(jump_term);
            }
            if which == RateKind::Dn {
                e = e.min((1.0 - gamma) / (1.0 + r_tilde) - iota);
            }
            e
        }
        RateKind::ABarN => {
            let mut e = sampling.min(bias);
            if !continuous_x {
                let theta = if r <= 1.0 { 0.0 } else { theta };
                e = e.min((1.0 - r * varpi - theta) / r.max(1.0) - (1.0 - 2.0 * varpi));
            }
            e
        }
    };
    if exponent <= 0.0 {
        return Err(Error::RateConstraint(format!(
            "slack terms (iota = {iota}, theta = {theta}) too large: exponent {exponent} is not positive"
        )));
    }
    Ok(exponent)
}

/// Centring `m_n` and scale `c_n = (2 log b_n)^{-1/2}` for the maximum of
/// `b_n` absolute standardised block errors.
pub fn evt_normalization(b_n: usize) -> Result<(f64, f64)> {
    if b_n < 2 {
        return Err(Error::OutOfRange(format!("need at least 2 blocks, got {b_n}")));
    }
    let l = (b_n as f64).ln();
    let root = (2.0 * l).sqrt();
    let m_n = root - (l.ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * root);
    Ok((m_n, 1.0 / root))
}

/// CDF of the limit law of the normalised maximum, `exp(-2 exp(-x))`.
pub fn gumbel2_cdf(x: f64) -> f64 {
    (-2.0 * (-x).exp()).exp()
}

/// Median of [`gumbel2_cdf`], `-ln(ln 2 / 2)`.
pub fn gumbel2_median() -> f64 {
    -(std::f64::consts::LN_2 / 2.0).ln()
}

/// One-sample Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("KS distance of an empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(n: usize) -> (Vec<f64>, f64) {
        let step = 1.0 / n as f64;
        ((0..=n).map(|k| k as f64 * step).collect(), step)
    }

    #[test]
    fn constant_path() {
        let v = vec![1.0; 101];
        assert_abs_diff_eq!(oracle_occupation(&v, 0.22, 2.0).unwrap(), 22.0, epsilon = 1e-12);
        assert_eq!(oracle_occupation(&v, 0.22, 0.5).unwrap(), 0.0);
        for a in [0.1, 0.5, 0.9] {
            assert_eq!(oracle_quantile(&v, 0.22, a).unwrap(), 1.0);
        }
    }

    #[test]
    fn ramp_occupation_and_quantile() {
        let (v, step) = ramp(1000);
        assert!((oracle_occupation(&v, step, 0.5).unwrap() - 0.5).abs() <= step + 1e-12);
        assert!((oracle_quantile(&v, step, 0.25).unwrap() - 0.25).abs() <= step + 1e-12);
    }

    #[test]
    fn sorted_and_direct_agree() {
        let (v, step) = ramp(97);
        let o = OracleOccupation::new(&v, step).unwrap();
        for x in [-1.0, 0.0, 0.13, 0.5, 0.99, 2.0] {
            assert_eq!(o.evaluate(x), oracle_occupation(&v, step, x).unwrap());
        }
    }

    #[test]
    fn empty_path_errors() {
        assert!(oracle_occupation(&[1.0], 0.1, 1.0).is_err());
        assert!(oracle_quantile(&[], 0.1, 0.5).is_err());
        assert!(oracle_quantile(&[1.0, 2.0], 0.1, 1.5).is_err());
    }

    #[test]
    fn constant_path_density_is_bump() {
        let v = vec![0.7; 2201];
        let f = oracle_density(&v, 0.01, Kernel::Gaussian, Some(0.1)).unwrap();
        assert_abs_diff_eq!(f.eval(0.7), 22.0 / (0.1 * (2.0 * std::f64::consts::PI).sqrt()), epsilon = 1e-9);
        assert_abs_diff_eq!(f.eval(0.8), f.eval(0.6), epsilon = 1e-9);
    }

    #[test]
    fn rate_examples() {
        let e = rate_bound(&RateParams::continuous(0.5, 0.01), RateKind::An).unwrap();
        assert_abs_diff_eq!(e, 0.24, epsilon = 1e-12);
        let p = RateParams {
            r: 0.5,
            varpi: 0.45,
            continuous_x: false,
            ..RateParams::continuous(0.5, 0.01)
        };
        assert_abs_diff_eq!(rate_bound(&p, RateKind::An).unwrap(), 0.175, epsilon = 1e-12);
        let d = rate_bound(&RateParams::continuous(0.5, 0.01), RateKind::Dn).unwrap();
        assert_abs_diff_eq!(d, 0.24, epsilon = 1e-12);
        let a = rate_bound(&RateParams::continuous(0.5, 0.01), RateKind::ABarN).unwrap();
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rate_constraints_are_named() {
        let p = RateParams {
            r: 0.5,
            varpi: 0.2,
            gamma: 0.5,
            continuous_x: false,
            ..RateParams::continuous(0.5, 0.01)
        };
        let msg = rate_bound(&p, RateKind::An).unwrap_err().to_string();
        assert!(msg.contains("gamma"), "{msg}");
        let p = RateParams { r: 2.5, ..RateParams::continuous(0.5, 0.01) };
        assert!(rate_bound(&p, RateKind::An).unwrap_err().to_string().contains("r = 2.5"));
        let p = RateParams::continuous(0.5, 0.3);
        assert!(rate_bound(&p, RateKind::An).is_err());
    }

    #[test]
    fn evt_constants() {
        let (m, c) = evt_normalization(100).unwrap();
        assert_abs_diff_eq!(m, 2.36625, epsilon = 1e-5);
        assert_abs_diff_eq!(c, 0.329505, epsilon = 1e-6);
        assert_abs_diff_eq!(gumbel2_cdf(0.0), (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(gumbel2_cdf(gumbel2_median()), 0.5, epsilon = 1e-15);
        assert!(evt_normalization(1).is_err());
    }

    #[test]
    fn m_n_increases() {
        let mut prev = f64::NEG_INFINITY;
        let mut b = 10usize;
        while b <= 1_000_000 {
            let (m, _) = evt_normalization(b).unwrap();
            assert!(m > prev, "b = {b}");
            prev = m;
            b += 1 + b / 50;
        }
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert_abs_diff_eq!(ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap(), 0.05, epsilon = 1e-12);
    }
}
