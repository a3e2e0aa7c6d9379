//! Drift/diffusion coefficient models with analytic drift Jacobians.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Coefficients `b(t, x)`, `σ(t, x)` and `∇b(t, x)` of a Volterra equation.
///
/// Outputs are written into caller buffers: `drift` has length `d`,
/// `diffusion` is a row-major `d × m` matrix and `drift_jacobian` a
/// row-major `d × d` matrix.
pub trait Coefficients: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn drift_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq)]
enum Zoo {
    Zero,
    /// `b(x) = A x + c`, `σ ≡ Σ`.
    LinearAdditive {
        a: Vec<f64>,
        sigma: Vec<f64>,
        shift: Vec<f64>,
    },
    SinDrift {
        a: f64,
    },
    TanhMixed {
        a: f64,
    },
}

/// A named coefficient triple from the built-in zoo with its declared
/// constants `L1` (gradient/growth/σ-Lipschitz bound) and `L2`
/// (Lipschitz bound of `∇b`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    name: String,
    d: usize,
    m: usize,
    l1: f64,
    l2: f64,
    zoo: Zoo,
}

pub const BUILTIN_MODELS: [&str; 4] = ["zero", "linear-additive", "sin-drift", "tanh-mixed"];

/// Build a model from the zoo.
///
/// Parameters by name:
/// * `zero`: none.
/// * `linear-additive`: `A` (d·d, row-major), then `Σ` (d·m), then an
///   optional drift shift `c` (d).
/// * `sin-drift`, `tanh-mixed` (d = m = 1): the drift amplitude `a`.
pub fn builtin_model(name: &str, d: usize, m: usize, params: &[f64]) -> Result<ModelSpec> {
    if d == 0 || m == 0 {
        return Err(Error::config(format!("model {name}: dimensions d = {d}, m = {m} must be positive")));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::config(format!("model {name}: parameters must be finite")));
    }
    let arity = |want: &[usize]| -> Result<()> {
        if want.contains(&params.len()) {
            Ok(())
        } else {
            Err(Error::config(format!("model {name} expects {want:?} parameters, got {}", params.len())))
        }
    };
    let scalar_only = || -> Result<()> {
        if d == 1 && m == 1 {
            Ok(())
        } else {
            Err(Error::config(format!("model {name} requires d = m = 1, got d = {d}, m = {m}")))
        }
    };
    let (zoo, l1, l2) = match name {
        "zero" => {
            arity(&[0])?;
            (Zoo::Zero, 1.0, 0.0)
        }
        "linear-additive" => {
            arity(&[d * d + d * m, d * d + d * m + d])?;
            let a = params[..d * d].to_vec();
            let sigma = params[d * d..d * d + d * m].to_vec();
            let shift = if params.len() > d * d + d * m { params[d * d + d * m..].to_vec() } else { vec![0.0; d] };
            let l1 = frobenius(&a).max(frobenius(&sigma)).max(frobenius(&shift));
            let l1 = if l1 > 0.0 { l1 } else { 1.0 };
            (Zoo::LinearAdditive { a, sigma, shift }, l1, 0.0)
        }
        "sin-drift" => {
            scalar_only()?;
            arity(&[1])?;
            let a = libm::fabs(params[0]);
            (Zoo::SinDrift { a: params[0] }, a.max(1.0), a)
        }
        "tanh-mixed" => {
            scalar_only()?;
            arity(&[1])?;
            let a = libm::fabs(params[0]);
            // sup |d²/dx² tanh| = 4/(3√3)
            let l2 = a * 4.0 / (3.0 * libm::sqrt(3.0));
            (Zoo::TanhMixed { a: params[0] }, a.max(1.5), l2)
        }
        other => {
            return Err(Error::config(format!("unknown model {other:?}; expected one of {BUILTIN_MODELS:?}")));
        }
    };
    Ok(ModelSpec { name: name.to_string(), d, m, l1, l2, zoo })
}

/// Euclidean (Frobenius) norm of a vector or row-major matrix.
pub fn frobenius(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// True when `σ` does not depend on the state.
    pub fn additive_noise(&self) -> bool {
        !matches!(self.zoo, Zoo::TanhMixed { .. })
    }
}

impl Coefficients for ModelSpec {
    fn state_dim(&self) -> usize {
        self.d
    }

    fn noise_dim(&self) -> usize {
        self.m
    }

    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match &self.zoo {
            Zoo::Zero => out.fill(0.0),
            Zoo::LinearAdditive { a, shift, .. } => {
                let d = self.d;
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &a[i * d..(i + 1) * d];
                    *o = row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + shift[i];
                }
            }
            Zoo::SinDrift { a } => out[0] = a * libm::sin(x[0]),
            Zoo::TanhMixed { a } => out[0] = a * libm::tanh(x[0]),
        }
    }

    fn diffusion(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match &self.zoo {
            Zoo::Zero => out.fill(0.0),
            Zoo::LinearAdditive { sigma, .. } => out.copy_from_slice(sigma),
            Zoo::SinDrift { .. } => out[0] = 1.0,
            Zoo::TanhMixed { .. } => out[0] = 1.0 + 0.5 * libm::tanh(x[0]),
        }
    }

    fn drift_jacobian(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match &self.zoo {
            Zoo::Zero => out.fill(0.0),
            Zoo::LinearAdditive { a, .. } => out.copy_from_slice(a),
            Zoo::SinDrift { a } => out[0] = a * libm::cos(x[0]),
            Zoo::TanhMixed { a } => {
                let th = libm::tanh(x[0]);
                out[0] = a * (1.0 - th * th);
            }
        }
    }
}

/// `∇b(t, base) · dir`, the drift of the linearized equation.
pub fn directional_drift_derivative<M: Coefficients + ?Sized>(mo: &M, t: f64, base: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
    let d = mo.state_dim();
    if base.len() != d || dir.len() != d {
        return Err(Error::contract(format!(
            "directional derivative needs vectors of dimension {d}, got {} and {}",
            base.len(),
            dir.len()
        )));
    }
    let mut jac = vec![0.0; d * d];
    let mut out = vec![0.0; d];
    mo.drift_jacobian(t, base, &mut jac);
    mat_vec(&jac, dir, &mut out);
    Ok(out)
}

/// `out = M v` for a row-major square or rectangular `M`.
pub(crate) fn mat_vec(mat: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = mat[i * cols..(i + 1) * cols].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}
