//! Two-time kernels `K(t, s)`: constant, Riemann–Liouville and the
//! Molchan–Golosov kernel of fractional Brownian motion.

use alloc::format;
use alloc::string::String;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{self, GaussLegendre, QuadratureConfig, Singular};
use crate::special::{gamma_real, Hyp2f1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Constant(f64),
    /// `(t − s)_+^(H−1/2) / Γ(H+1/2)`.
    RiemannLiouville(f64),
    /// `K_H(t,s)`, the square root of the fBm covariance operator.
    FbmMolchanGolosov(f64),
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    kind: KernelKind,
    label: String,
    gamma_h: f64,
    hyp: Option<Hyp2f1>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Result<Self> {
        let (gamma_h, hyp, label) = match kind {
            KernelKind::Constant(c) => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::domain("kernel", format!("constant kernel value {c} must be finite and >= 0")));
                }
                (1.0, None, format!("const({c})"))
            }
            KernelKind::RiemannLiouville(h) => {
                check_hurst(h)?;
                (gamma_real(h + 0.5), None, format!("rl({h})"))
            }
            KernelKind::FbmMolchanGolosov(h) => {
                check_hurst(h)?;
                let hyp = Hyp2f1::new(0.5 - h, h - 0.5, h + 0.5)?;
                (gamma_real(h + 0.5), Some(hyp), format!("fbm({h})"))
            }
        };
        Ok(KernelSpec { kind, label, gamma_h, hyp })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(KernelKind::Constant(value))
    }

    pub fn riemann_liouville(hurst: f64) -> Result<Self> {
        Self::new(KernelKind::RiemannLiouville(hurst))
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::new(KernelKind::FbmMolchanGolosov(hurst))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn hurst(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Constant(_) => None,
            KernelKind::RiemannLiouville(h) | KernelKind::FbmMolchanGolosov(h) => Some(h),
        }
    }

    /// `α = |1/2 − H|`, zero for the constant kernel.
    pub fn alpha(&self) -> f64 {
        self.hurst().map_or(0.0, |h| libm::fabs(0.5 - h))
    }

    /// True when the kernel blows up as `s ↑ t`.
    pub fn singular_on_diagonal(&self) -> bool {
        self.hurst().is_some_and(|h| h < 0.5)
    }

    /// True when the kernel blows up as `s ↓ 0` (fBm kernel with `H ≠ 1/2`).
    pub fn singular_at_origin(&self) -> bool {
        matches!(self.kind, KernelKind::FbmMolchanGolosov(h) if h != 0.5)
    }

    fn is_brownian(&self) -> bool {
        self.hurst() == Some(0.5)
    }

    /// `K(t, s)`.
    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(t >= 0.0 && s >= 0.0 && t.is_finite() && s.is_finite()) {
            return Err(Error::domain("kernel_eval", format!("times (t, s) = ({t}, {s}) must be finite and >= 0")));
        }
        if let KernelKind::Constant(c) = self.kind {
            return Ok(c);
        }
        if s >= t {
            if s == t && self.singular_on_diagonal() {
                return Err(self.singular(t, s));
            }
            return Ok(0.0);
        }
        self.eval_gap(t, s, t - s)
    }

    /// `K(t, s)` for `s < t` where the caller supplies `gap = t − s`
    /// directly (more accurate than the difference when `gap ≪ t`).
    pub(crate) fn eval_gap(&self, t: f64, s: f64, gap: f64) -> Result<f64> {
        match self.kind {
            KernelKind::Constant(c) => Ok(c),
            _ if self.is_brownian() => Ok(1.0),
            KernelKind::RiemannLiouville(h) => {
                if gap <= 0.0 {
                    return Err(self.singular(t, s));
                }
                Ok(libm::pow(gap, h - 0.5) / self.gamma_h)
            }
            KernelKind::FbmMolchanGolosov(h) => {
                if gap <= 0.0 || s <= 0.0 {
                    return Err(self.singular(t, s));
                }
                let hyp = self.hyp.as_ref().expect("fbm kernel carries its 2F1");
                let f = hyp.eval_negative_ratio(gap, s)?;
                Ok(libm::pow(gap, h - 0.5) / self.gamma_h * f)
            }
        }
    }

    fn singular(&self, t: f64, s: f64) -> Error {
        Error::SingularPoint { label: self.label.clone(), t, s }
    }

    /// Which ends of `[lo, hi] ⊂ [0, t]` need graded quadrature.
    fn panel_ends(&self, lo: f64, tail: f64) -> Singular {
        if matches!(self.kind, KernelKind::Constant(_)) || self.is_brownian() {
            return Singular::Neither;
        }
        let lo_sing = lo == 0.0 && self.singular_at_origin();
        // RL with H > 1/2 is bounded at s = t but not smooth; grade anyway
        let hi_sing = tail == 0.0;
        match (lo_sing, hi_sing) {
            (true, true) => Singular::Both,
            (true, false) => Singular::Lo,
            (false, true) => Singular::Hi,
            (false, false) => Singular::Neither,
        }
    }

    /// `∫_lo^{lo+width} K(t, s) ds` where `t = lo + width + tail`.
    pub fn panel_integral(&self, lo: f64, width: f64, tail: f64, rule: &PanelRule) -> Result<f64> {
        if !(width > 0.0) {
            return Ok(0.0);
        }
        match self.kind {
            KernelKind::Constant(c) => Ok(c * width),
            _ if self.is_brownian() => Ok(width),
            KernelKind::RiemannLiouville(h) => {
                let kappa = h + 0.5;
                let scale = kappa * self.gamma_h;
                Ok((libm::pow(tail + width, kappa) - libm::pow(tail, kappa)) / scale)
            }
            KernelKind::FbmMolchanGolosov(_) => {
                let t = lo + width + tail;
                quadrature::integrate_fixed(&rule.rule, rule.levels, rule.ratio, width, self.panel_ends(lo, tail), |lo_gap, hi_gap| {
                    self.eval_gap(t, lo + lo_gap, tail + hi_gap)
                })
            }
        }
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("kernel", format!("Hurst parameter H = {h} must lie in (0, 1)")))
    }
}

/// A non-adaptive graded rule reused across many panels.
#[derive(Debug, Clone)]
pub struct PanelRule {
    rule: GaussLegendre,
    levels: usize,
    ratio: f64,
}

impl PanelRule {
    pub fn new(cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PanelRule { rule: GaussLegendre::new(cfg.gauss_order), levels: cfg.panels, ratio: cfg.singularity_split })
    }
}

/// `K(t, s)`; errors at singular points instead of returning infinity.
pub fn kernel_eval(k: &KernelSpec, t: f64, s: f64) -> Result<f64> {
    k.eval(t, s)
}

fn pow_integrability(k: &KernelSpec, q: f64) -> Result<()> {
    let Some(h) = k.hurst() else { return Ok(()) };
    let (margin, constraint) = match k.kind {
        KernelKind::FbmMolchanGolosov(_) => (1.0 - q * libm::fabs(h - 0.5), "1 - q|H - 1/2| > 0"),
        _ => (1.0 + q * (h - 0.5), "1 + q(H - 1/2) > 0"),
    };
    if margin > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("kernel_pow_integral", format!("{constraint} violated for {} with q = {q}", k.label)))
    }
}

fn pow_integral_args(k: &KernelSpec, t: f64, q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::domain("kernel_pow_integral", format!("exponent q = {q} must be >= 1")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("kernel_pow_integral", format!("time t = {t} must be > 0")));
    }
    pow_integrability(k, q)
}

/// `∫_0^t K(t, s)^q ds`: closed form for the constant and RL kernels,
/// graded quadrature for the fBm kernel.
pub fn kernel_pow_integral(k: &KernelSpec, t: f64, q: f64, quad: &QuadratureConfig) -> Result<f64> {
    pow_integral_args(k, t, q)?;
    match k.kind {
        KernelKind::Constant(c) => Ok(libm::pow(c, q) * t),
        _ if k.is_brownian() => Ok(t),
        KernelKind::RiemannLiouville(h) => {
            let e = 1.0 + q * (h - 0.5);
            Ok(libm::pow(t, e) / (e * libm::pow(k.gamma_h, q)))
        }
        KernelKind::FbmMolchanGolosov(_) => kernel_pow_integral_quadrature(k, t, q, quad),
    }
}

/// Numerical route for `∫_0^t K(t, s)^q ds`, available for every kind.
pub fn kernel_pow_integral_quadrature(k: &KernelSpec, t: f64, q: f64, quad: &QuadratureConfig) -> Result<f64> {
    pow_integral_args(k, t, q)?;
    let ends = k.panel_ends(0.0, 0.0);
    quadrature::integrate(quad, t, ends, |lo_gap, hi_gap| Ok(libm::pow(k.eval_gap(t, lo_gap, hi_gap)?, q)))
}

/// `∫_0^{t∧t2} |K(t2, s) − K(t, s)|^power ds`.
pub fn kernel_time_modulus(k: &KernelSpec, t: f64, t2: f64, power: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(t >= 0.0 && t2 >= 0.0 && t.is_finite() && t2.is_finite()) {
        return Err(Error::domain("kernel_time_modulus", format!("times ({t}, {t2}) must be finite and >= 0")));
    }
    if !(power >= 1.0) {
        return Err(Error::domain("kernel_time_modulus", format!("power {power} must be >= 1")));
    }
    let (lo, hi) = if t <= t2 { (t, t2) } else { (t2, t) };
    if lo == hi || lo == 0.0 || matches!(k.kind, KernelKind::Constant(_)) || k.is_brownian() {
        return Ok(0.0);
    }
    let d = hi - lo;
    let ends = k.panel_ends(0.0, 0.0);
    quadrature::integrate(quad, lo, ends, |s, gap| {
        let near = k.eval_gap(lo, s, gap)?;
        let far = k.eval_gap(hi, s, gap + d)?;
        Ok(libm::pow(libm::fabs(far - near), power))
    })
}

/// `∫_0^{s∧t} K(s, r) K(t, r) dr`, the covariance of `∫ K(·, r) dB_r`.
pub fn kernel_covariance(k: &KernelSpec, s: f64, t: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain("kernel_covariance", format!("times ({s}, {t}) must be >= 0")));
    }
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    if lo == 0.0 {
        return Ok(0.0);
    }
    let d = hi - lo;
    let ends = k.panel_ends(0.0, 0.0);
    quadrature::integrate(quad, lo, ends, |r, gap| Ok(k.eval_gap(lo, r, gap)? * k.eval_gap(hi, r, gap + d)?))
}

/// `V_H = Γ(2−2H) cos(πH) / (πH(1−2H))`, with the limit value 1 at `H = 1/2`.
pub fn fbm_variance_constant(h: f64) -> Result<f64> {
    check_hurst(h)?;
    if h == 0.5 {
        return Ok(1.0);
    }
    Ok(gamma_real(2.0 - 2.0 * h) * libm::cos(PI * h) / (PI * h * (1.0 - 2.0 * h)))
}

/// `R_H(s, t) = V_H/2 (s^2H + t^2H − |t−s|^2H)`; `s ∧ t` at `H = 1/2`.
pub fn fbm_covariance(h: f64, s: f64, t: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain("fbm_covariance", format!("times ({s}, {t}) must be >= 0")));
    }
    if h == 0.5 {
        return Ok(s.min(t));
    }
    let v = fbm_variance_constant(h)?;
    Ok(0.5 * v * covariance_shape(h, s, t))
}

/// `s^2H + t^2H − |t−s|^2H`.
pub fn covariance_shape(h: f64, s: f64, t: f64) -> f64 {
    let e = 2.0 * h;
    libm::pow(s, e) + libm::pow(t, e) - libm::pow(libm::fabs(t - s), e)
}
