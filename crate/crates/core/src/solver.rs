//! Explicit discretization of the perturbed, deterministic and linearized
//! Volterra equations on a shared grid and a shared Brownian path.
//!
//! All three equations are advanced with the same recursion
//!
//! ```text
//! Y_{t_j} = y0 + Σ_{i<j} w_{j,i} f_i + scale · Σ_{i<j} ζ_{j,i} g_i ΔB_i
//! ```
//!
//! where `w` are drift weights (kernel integrated over each panel by
//! default), `ζ` are left-point diffusion weights and `f_i`, `g_i` are the
//! coefficients frozen at node `t_i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PanelRule};
use crate::models::{mat_vec, Coefficients};
use crate::paths::{PathBundle, TimeGrid};
use crate::quadrature::QuadratureConfig;

/// States with a component above this magnitude count as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftWeighting {
    /// `w_{j,i} = ∫_{t_i}^{t_{i+1}} K(t_j, s) ds`.
    #[default]
    KernelIntegrated,
    /// `w_{j,i} = K(t_j, t_i) Δt`.
    LeftPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusionWeighting {
    /// `ζ_{j,i} = K(t_j, t_i)`.
    #[default]
    LeftPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SchemeConfig {
    pub drift_weighting: DriftWeighting,
    pub diffusion_weighting: DiffusionWeighting,
    pub quad: QuadratureConfig,
}

/// Strictly lower-triangular weights `w_{j,i}`, `1 ≤ j ≤ n`, `0 ≤ i < j`,
/// stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    steps: usize,
    data: Vec<f64>,
}

impl Weights {
    fn offset(j: usize) -> usize {
        j * (j - 1) / 2
    }

    /// Assemble from rows `1..=n`; row `j` must have exactly `j` entries.
    pub fn from_rows<I>(steps: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut data = Vec::with_capacity(steps * (steps + 1) / 2);
        let mut count = 0;
        for (k, row) in rows.into_iter().enumerate() {
            let j = k + 1;
            if j > steps || row.len() != j {
                return Err(Error::contract(format!("weight row {j} has {} entries (steps = {steps})", row.len())));
            }
            data.extend_from_slice(&row);
            count = j;
        }
        if count != steps {
            return Err(Error::contract(format!("expected {steps} weight rows, got {count}")));
        }
        Ok(Weights { steps, data })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Row `j` (`1 ≤ j ≤ n`): the weights `w_{j,0..j}`.
    pub fn row(&self, j: usize) -> &[f64] {
        if j == 0 {
            return &[];
        }
        let o = Self::offset(j);
        &self.data[o..o + j]
    }

    /// `w_{j,i}`, zero on and above the diagonal.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        if i >= j || j > self.steps {
            0.0
        } else {
            self.data[Self::offset(j) + i]
        }
    }
}

/// One row of drift weights.
pub fn drift_weight_row(k: &KernelSpec, grid: &TimeGrid, cfg: &SchemeConfig, rule: &PanelRule, j: usize) -> Result<Vec<f64>> {
    let dt = grid.dt();
    let t = grid.node(j);
    (0..j)
        .map(|i| {
            let lo = i as f64 * dt;
            let tail = (j - i - 1) as f64 * dt;
            let integrated = cfg.drift_weighting == DriftWeighting::KernelIntegrated || (i == 0 && k.singular_at_origin());
            if integrated {
                k.panel_integral(lo, dt, tail, rule)
            } else {
                Ok(k.eval_gap(t, lo, (j - i) as f64 * dt)? * dt)
            }
        })
        .collect()
}

/// One row of left-point diffusion weights. On the first panel of a
/// kernel that is singular at `s = 0` the panel mean replaces the point value.
pub fn diffusion_weight_row(k: &KernelSpec, grid: &TimeGrid, rule: &PanelRule, j: usize) -> Result<Vec<f64>> {
    let dt = grid.dt();
    let t = grid.node(j);
    (0..j)
        .map(|i| {
            if i == 0 && k.singular_at_origin() {
                Ok(k.panel_integral(0.0, dt, (j - 1) as f64 * dt, rule)? / dt)
            } else {
                k.eval_gap(t, i as f64 * dt, (j - i) as f64 * dt)
            }
        })
        .collect()
}

pub fn drift_weights(k: &KernelSpec, grid: &TimeGrid, cfg: &SchemeConfig) -> Result<Weights> {
    let rule = PanelRule::new(&cfg.quad)?;
    let rows = (1..=grid.steps()).map(|j| drift_weight_row(k, grid, cfg, &rule, j)).collect::<Result<Vec<_>>>()?;
    Weights::from_rows(grid.steps(), rows)
}

pub fn diffusion_weights(k: &KernelSpec, grid: &TimeGrid, quad: &QuadratureConfig) -> Result<Weights> {
    let rule = PanelRule::new(quad)?;
    let rows = (1..=grid.steps()).map(|j| diffusion_weight_row(k, grid, &rule, j)).collect::<Result<Vec<_>>>()?;
    Weights::from_rows(grid.steps(), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryLabel {
    PerturbedX,
    DeterministicX0,
    NormalizedZeps,
    LimitZ,
}

impl TrajectoryLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryLabel::PerturbedX => "X_eps",
            TrajectoryLabel::DeterministicX0 => "X0",
            TrajectoryLabel::NormalizedZeps => "Z_eps",
            TrajectoryLabel::LimitZ => "Z",
        }
    }
}

/// Values on the grid nodes, `(n+1) × d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    d: usize,
    values: Vec<f64>,
    label: TrajectoryLabel,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, d: usize, values: Vec<f64>, label: TrajectoryLabel) -> Result<Self> {
        if d == 0 || values.len() != (grid.steps() + 1) * d {
            return Err(Error::contract(format!("trajectory needs {} x {d} values, got {}", grid.steps() + 1, values.len())));
        }
        Ok(Trajectory { grid, d, values, label })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> TrajectoryLabel {
        self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// State at node `j`.
    pub fn at(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub(crate) fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid || self.d != other.d {
            return Err(Error::contract(format!(
                "trajectories on different grids/dimensions ({} steps, d = {} vs {} steps, d = {})",
                self.grid.steps(),
                self.d,
                other.grid.steps(),
                other.d
            )));
        }
        Ok(())
    }
}

/// Precomputed drift and diffusion weights for one `(K1, K2, grid, config)`.
#[derive(Debug, Clone)]
pub struct Scheme {
    grid: TimeGrid,
    drift: Weights,
    diffusion: Weights,
}

impl Scheme {
    pub fn new(k1: &KernelSpec, k2: &KernelSpec, grid: TimeGrid, cfg: &SchemeConfig) -> Result<Self> {
        let drift = drift_weights(k1, &grid, cfg)?;
        let diffusion = diffusion_weights(k2, &grid, &cfg.quad)?;
        Ok(Scheme { grid, drift, diffusion })
    }

    pub fn from_weights(grid: TimeGrid, drift: Weights, diffusion: Weights) -> Result<Self> {
        if drift.steps() != grid.steps() || diffusion.steps() != grid.steps() {
            return Err(Error::contract("weight matrices do not match the grid"));
        }
        Ok(Scheme { grid, drift, diffusion })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn drift_weights(&self) -> &Weights {
        &self.drift
    }

    pub fn diffusion_weights(&self) -> &Weights {
        &self.diffusion
    }

    fn check_start<M: Coefficients + ?Sized>(&self, mo: &M, x0: &[f64]) -> Result<()> {
        if x0.len() != mo.state_dim() {
            return Err(Error::contract(format!("initial state has dimension {}, model expects {}", x0.len(), mo.state_dim())));
        }
        Ok(())
    }

    fn check_path<M: Coefficients + ?Sized>(&self, mo: &M, path: &PathBundle) -> Result<()> {
        if *path.grid() != self.grid {
            return Err(Error::contract("path grid differs from the scheme grid"));
        }
        if path.noise_dim() != mo.noise_dim() {
            return Err(Error::contract(format!("path has {} noise components, model expects {}", path.noise_dim(), mo.noise_dim())));
        }
        Ok(())
    }

    /// `X^0_{t_j} = x0 + Σ_{i<j} w_{j,i} b(t_i, X^0_{t_i})`.
    pub fn solve_deterministic<M: Coefficients + ?Sized>(&self, mo: &M, x0: &[f64]) -> Result<Trajectory> {
        self.check_start(mo, x0)?;
        let d = mo.state_dim();
        let grid = self.grid;
        let mut drift = |i: usize, x: &[f64], out: &mut [f64]| mo.drift(grid.node(i), x, out);
        let values = recurse(&grid, d, x0, &self.drift, None, &mut drift, TrajectoryLabel::DeterministicX0)?;
        Trajectory::new(grid, d, values, TrajectoryLabel::DeterministicX0)
    }

    /// `X^ε_{t_j} = x0 + Σ w_{j,i} b(t_i, X^ε_{t_i}) + √ε Σ ζ_{j,i} σ(t_i, X^ε_{t_i}) ΔB_i`.
    pub fn solve_perturbed<M: Coefficients + ?Sized>(&self, mo: &M, x0: &[f64], eps: f64, path: &PathBundle) -> Result<Trajectory> {
        self.check_start(mo, x0)?;
        self.check_path(mo, path)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::contract(format!("eps = {eps} must be positive")));
        }
        let (d, m) = (mo.state_dim(), mo.noise_dim());
        let grid = self.grid;
        let mut sigma = vec![0.0; d * m];
        let mut drift = |i: usize, x: &[f64], out: &mut [f64]| mo.drift(grid.node(i), x, out);
        let mut noise = |i: usize, x: &[f64], out: &mut [f64]| {
            mo.diffusion(grid.node(i), x, &mut sigma);
            mat_vec(&sigma, path.increment(i), out);
        };
        let values = recurse(
            &grid,
            d,
            x0,
            &self.drift,
            Some((&self.diffusion, libm::sqrt(eps), &mut noise)),
            &mut drift,
            TrajectoryLabel::PerturbedX,
        )?;
        Trajectory::new(grid, d, values, TrajectoryLabel::PerturbedX)
    }

    /// `Z_{t_j} = Σ w_{j,i} ∇b(t_i, X^0_{t_i}) Z_{t_i} + Σ ζ_{j,i} σ(t_i, X^0_{t_i}) ΔB_i`.
    pub fn solve_limit<M: Coefficients + ?Sized>(&self, mo: &M, skeleton: &Trajectory, path: &PathBundle) -> Result<Trajectory> {
        self.check_path(mo, path)?;
        if skeleton.grid != self.grid || skeleton.d != mo.state_dim() {
            return Err(Error::contract("deterministic skeleton does not match the scheme"));
        }
        let (d, m) = (mo.state_dim(), mo.noise_dim());
        let grid = self.grid;
        let mut jac = vec![0.0; d * d];
        let mut sigma = vec![0.0; d * m];
        let mut drift = |i: usize, z: &[f64], out: &mut [f64]| {
            mo.drift_jacobian(grid.node(i), skeleton.at(i), &mut jac);
            mat_vec(&jac, z, out);
        };
        let mut noise = |i: usize, _z: &[f64], out: &mut [f64]| {
            mo.diffusion(grid.node(i), skeleton.at(i), &mut sigma);
            mat_vec(&sigma, path.increment(i), out);
        };
        let zero = vec![0.0; d];
        let values = recurse(&grid, d, &zero, &self.drift, Some((&self.diffusion, 1.0, &mut noise)), &mut drift, TrajectoryLabel::LimitZ)?;
        Trajectory::new(grid, d, values, TrajectoryLabel::LimitZ)
    }
}

type NodeFn<'a> = dyn FnMut(usize, &[f64], &mut [f64]) + 'a;

fn recurse(
    grid: &TimeGrid,
    d: usize,
    start: &[f64],
    drift_w: &Weights,
    noise: Option<(&Weights, f64, &mut NodeFn<'_>)>,
    drift: &mut NodeFn<'_>,
    label: TrajectoryLabel,
) -> Result<Vec<f64>> {
    let n = grid.steps();
    let mut values = vec![0.0; (n + 1) * d];
    values[..d].copy_from_slice(start);
    let mut drift_terms = vec![0.0; n * d];
    let (noise_w, scale, mut noise_fn) = match noise {
        Some((w, s, f)) => (Some(w), s, Some(f)),
        None => (None, 0.0, None),
    };
    let mut noise_terms = if noise_w.is_some() { vec![0.0; n * d] } else { Vec::new() };

    for j in 1..=n {
        let prev = j - 1;
        let (done, _) = values.split_at(j * d);
        let x_prev = &done[prev * d..];
        drift(prev, x_prev, &mut drift_terms[prev * d..j * d]);
        if let Some(f) = noise_fn.as_mut() {
            f(prev, x_prev, &mut noise_terms[prev * d..j * d]);
        }
        let w_row = drift_w.row(j);
        for c in 0..d {
            let mut acc = 0.0;
            for (i, w) in w_row.iter().enumerate() {
                acc += w * drift_terms[i * d + c];
            }
            let mut x = start[c] + acc;
            if let Some(nw) = noise_w {
                let mut nacc = 0.0;
                for (i, z) in nw.row(j).iter().enumerate() {
                    nacc += z * noise_terms[i * d + c];
                }
                x += scale * nacc;
            }
            if !x.is_finite() || libm::fabs(x) > DIVERGENCE_THRESHOLD {
                return Err(Error::Divergence { label: label.as_str(), index: j, t: grid.node(j) });
            }
            values[j * d + c] = x;
        }
    }
    Ok(values)
}

/// Deterministic Volterra equation with drift kernel `k1`.
pub fn solve_deterministic<M: Coefficients + ?Sized>(
    mo: &M,
    k1: &KernelSpec,
    x0: &[f64],
    grid: TimeGrid,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    let drift = drift_weights(k1, &grid, cfg)?;
    let diffusion = Weights::from_rows(grid.steps(), (1..=grid.steps()).map(|j| vec![0.0; j]))?;
    Scheme::from_weights(grid, drift, diffusion)?.solve_deterministic(mo, x0)
}

#[allow(clippy::too_many_arguments)]
pub fn solve_perturbed<M: Coefficients + ?Sized>(
    mo: &M,
    k1: &KernelSpec,
    k2: &KernelSpec,
    x0: &[f64],
    eps: f64,
    path: &PathBundle,
    grid: TimeGrid,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    Scheme::new(k1, k2, grid, cfg)?.solve_perturbed(mo, x0, eps, path)
}

/// Limit equation; the deterministic skeleton is solved internally.
pub fn solve_limit<M: Coefficients + ?Sized>(
    mo: &M,
    k1: &KernelSpec,
    k2: &KernelSpec,
    x0: &[f64],
    path: &PathBundle,
    grid: TimeGrid,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    let scheme = Scheme::new(k1, k2, grid, cfg)?;
    let skeleton = scheme.solve_deterministic(mo, x0)?;
    scheme.solve_limit(mo, &skeleton, path)
}

/// `Z^ε = (X^ε − X^0)/√ε` node by node.
pub fn normalized_error(perturbed: &Trajectory, deterministic: &Trajectory, eps: f64) -> Result<Trajectory> {
    perturbed.check_compatible(deterministic)?;
    if !(eps > 0.0) {
        return Err(Error::contract(format!("eps = {eps} must be positive")));
    }
    let root = libm::sqrt(eps);
    let values = perturbed.values.iter().zip(&deterministic.values).map(|(a, b)| (a - b) / root).collect();
    Trajectory::new(perturbed.grid, perturbed.d, values, TrajectoryLabel::NormalizedZeps)
}
