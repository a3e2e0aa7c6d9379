//! Panel-wise Gauss–Legendre quadrature with geometric grading toward
//! endpoint singularities.
//!
//! Integrands are handed the distance to both ends of the interval rather
//! than the abscissa itself, so kernels like `(t − s)^(H−1/2)` can be
//! evaluated at gaps far below the resolution of `t`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Number of geometric levels toward each singular endpoint.
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub gauss_order: usize,
    /// Ratio between consecutive graded panels; the panel next to the
    /// singular end covers this fraction of the remaining interval.
    pub singularity_split: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { panels: 40, gauss_order: 10, singularity_split: 0.25, abs_tol: 1e-10 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels == 0 {
            return Err(Error::config("quad.panels must be positive"));
        }
        if self.gauss_order == 0 || self.gauss_order > 128 {
            return Err(Error::config("quad.gauss_order must lie in 1..=128"));
        }
        if !(self.singularity_split > 0.0 && self.singularity_split < 1.0) {
            return Err(Error::config("quad.singularity_split must lie in (0, 1)"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::config("quad.abs_tol must be positive"));
        }
        Ok(())
    }

    fn max_levels(&self) -> usize {
        // keep the innermost panel width above ~1e-250 of the interval
        let cap = -250.0 * core::f64::consts::LN_10 / libm::log(self.singularity_split);
        (cap as usize).max(1)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let n = order.max(1);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if libm::fabs(dx) < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b f(x) dx for a smooth integrand.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }

    /// Integrate over `[lo, hi]` measured as gaps from the singular end:
    /// `f` receives the gap, which runs from `lo` to `hi`.
    fn panel<F>(&self, lo: f64, hi: f64, f: &mut F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.integrate(lo, hi, f)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Which ends of the interval carry a singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singular {
    Lo,
    Hi,
    Both,
    Neither,
}

/// One geometric sweep toward gap 0 over a segment of length `len`.
fn graded_sweep<F>(rule: &GaussLegendre, len: f64, levels: usize, ratio: f64, f: &mut F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut acc = 0.0;
    let mut outer = len;
    for _ in 0..levels {
        let inner = outer * ratio;
        acc += rule.panel(inner, outer, f)?;
        outer = inner;
    }
    acc += rule.panel(0.0, outer, f)?;
    Ok(acc)
}

/// Fixed-resolution graded rule for `∫ f` over an interval of length `len`.
///
/// `f(lo_gap, hi_gap)` receives the distances from the evaluation point to
/// the lower and upper ends; they always sum to `len` up to rounding.
pub fn integrate_fixed<F>(rule: &GaussLegendre, levels: usize, ratio: f64, len: f64, ends: Singular, mut f: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if !(len > 0.0) {
        return Ok(0.0);
    }
    match ends {
        Singular::Neither => rule.integrate(0.0, len, |x| f(x, len - x)),
        Singular::Hi => graded_sweep(rule, len, levels, ratio, &mut |u| f(len - u, u)),
        Singular::Lo => graded_sweep(rule, len, levels, ratio, &mut |u| f(u, len - u)),
        Singular::Both => {
            let half = 0.5 * len;
            let lower = graded_sweep(rule, half, levels, ratio, &mut |u| f(u, len - u))?;
            let upper = graded_sweep(rule, half, levels, ratio, &mut |u| f(len - u, u))?;
            Ok(lower + upper)
        }
    }
}

/// Graded quadrature refined until two successive resolutions agree to
/// `cfg.abs_tol` (or to 1e−14 relative when that is looser).
pub fn integrate<F>(cfg: &QuadratureConfig, len: f64, ends: Singular, mut f: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    cfg.validate()?;
    let max_levels = cfg.max_levels();
    let mut levels = cfg.panels.min(max_levels);
    let mut order = cfg.gauss_order;
    let mut previous = integrate_fixed(&GaussLegendre::new(order), levels, cfg.singularity_split, len, ends, &mut f)?;
    let mut change = f64::INFINITY;
    for _ in 0..6 {
        levels = (2 * levels).min(max_levels);
        order = (order + 4).min(128);
        let next = integrate_fixed(&GaussLegendre::new(order), levels, cfg.singularity_split, len, ends, &mut f)?;
        change = libm::fabs(next - previous);
        if !next.is_finite() {
            break;
        }
        if change <= cfg.abs_tol.max(1e-14 * libm::fabs(next)) {
            return Ok(next);
        }
        previous = next;
    }
    Err(Error::Quadrature { tol: cfg.abs_tol, change })
}
