//! Kernel occupation density
//!
//! `f̂(x) = ∫_0^T h^{-1} κ((V̂_s - x)/h) ds = Σ_levels weight·h^{-1}·κ((level - x)/h)`
//! over the atoms of an occupation curve.

use std::f64::consts::PI;

use crate::error::{config_err, Error, Result};
use crate::occupation::OccupationCurve;
use crate::spotvol::{Estimate, SpotVolSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Gaussian,
    /// `(15/16)(1 - u²)²` on `[-1, 1]`: the squared Epanechnikov profile,
    /// renormalised, which is C¹ with bounded derivative.
    SmoothEpanechnikov,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            Kernel::SmoothEpanechnikov => {
                if u.abs() < 1.0 {
                    let s = 1.0 - u * u;
                    15.0 / 16.0 * s * s
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width beyond which the kernel is negligible (or zero).
    pub fn reach(self) -> f64 {
        match self {
            Kernel::Gaussian => 10.0,
            Kernel::SmoothEpanechnikov => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::SmoothEpanechnikov => "smooth_epanechnikov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kernel: Kernel,
    pub bandwidth: f64,
    /// Hölder exponent assumed for the occupation density.
    pub beta_hint: f64,
}

impl KernelSpec {
    /// Gaussian kernel with the rate-optimal bandwidth `Δn^{1/(4(2+β))}`, `β = 1/2`.
    pub fn for_mesh(delta_n: f64) -> Self {
        let beta = 0.5;
        Self {
            kernel: Kernel::Gaussian,
            bandwidth: default_bandwidth(delta_n, beta),
            beta_hint: beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(config_err(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        Ok(())
    }
}

pub fn default_bandwidth(delta_n: f64, beta: f64) -> f64 {
    delta_n.powf(1.0 / (4.0 * (2.0 + beta)))
}

/// Kernel-smoothed occupation measure, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct KernelDensity {
    levels: Vec<f64>,
    weights: Vec<f64>,
    spec: KernelSpec,
}

impl KernelDensity {
    pub fn new(levels: Vec<f64>, weights: Vec<f64>, spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        if levels.is_empty() || levels.len() != weights.len() {
            return Err(Error::InsufficientData("kernel density needs matching, non-empty atoms".into()));
        }
        Ok(Self { levels, weights, spec })
    }

    pub fn from_curve(curve: &OccupationCurve, spec: KernelSpec) -> Result<Self> {
        Self::new(curve.levels().to_vec(), curve.weights().to_vec(), spec)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.spec.bandwidth;
        let k = self.spec.kernel;
        self.levels
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * k.eval((v - x) / h))
            .sum::<f64>()
            / h
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Interval outside which the density vanishes (or is negligible).
    pub fn support(&self) -> (f64, f64) {
        let pad = self.spec.kernel.reach() * self.spec.bandwidth;
        let (lo, hi) = min_max(&self.levels);
        (lo - pad, hi + pad)
    }

    /// `n` equispaced points over `[min level - 4h, max level + 4h]`.
    pub fn default_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = min_max(&self.levels);
        let h = self.spec.bandwidth;
        linspace(lo - 4.0 * h, hi + 4.0 * h, n)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub(crate) fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `f̂` of the chosen block estimate at each evaluation point.
pub fn kernel_density(
    series: &SpotVolSeries,
    which: Estimate,
    spec: &KernelSpec,
    eval_points: &[f64],
) -> Result<Vec<f64>> {
    spec.validate()?;
    if eval_points.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfRange("evaluation points must be finite".into()));
    }
    let curve = crate::occupation::occupation_curve(series, which)?;
    Ok(KernelDensity::from_curve(&curve, *spec)?.eval_many(eval_points))
}

/// `∫ |f_a - f_b| w dx` over `support` by adaptive Simpson quadrature.
pub fn weighted_l1_distance<A, B, W>(f_a: A, f_b: B, w: W, support: (f64, f64), tol: f64) -> Result<f64>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let (lo, hi) = support;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::OutOfRange(format!("empty support [{lo}, {hi}]")));
    }
    let g = |x: f64| (f_a(x) - f_b(x)).abs() * w(x);
    Ok(integrate(g, lo, hi, tol))
}

/// Adaptive Simpson over 64 initial panels.
pub fn integrate<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> f64 {
    const PANELS: usize = 64;
    let width = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let a = lo + i as f64 * width;
            let b = a + width;
            let m = 0.5 * (a + b);
            let (fa, fm, fb) = (g(a), g(m), g(b));
            let whole = width / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&g, a, b, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<G: Fn(f64) -> f64>(
    g: &G,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
