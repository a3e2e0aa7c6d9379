//! Numerical core for stochastic Volterra equations with singular kernels.
//!
//! The crate simulates the perturbed equation
//! `X^ε_t = x + ∫ K1(t,s) b(s, X^ε_s) ds + √ε ∫ K2(t,s) σ(s, X^ε_s) dB_s`,
//! its deterministic skeleton `X^0`, the normalized fluctuation
//! `Z^ε = (X^ε − X^0)/√ε` and the linearized limit `Z`, all on one shared
//! Brownian path, and provides the Monte Carlo estimators and kernel/model
//! hypothesis checkers used to study `Z^ε → Z`.
//!
//! Everything here is pure computation: no IO, no threads, only `alloc`.
//! Parallel fan-out, configuration and file formats live in the companion
//! `volterra-clt` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod kernels;
pub mod models;
pub mod paths;
pub mod quadrature;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use kernels::{KernelKind, KernelSpec};
pub use models::{Coefficients, ModelSpec};
pub use paths::{PathBundle, TimeGrid};
pub use quadrature::QuadratureConfig;
pub use solver::{Scheme, SchemeConfig, Trajectory, TrajectoryLabel};
