//! Time grids and reproducible Brownian increments.
//!
//! Every Gaussian draw is a pure function of `(master_seed, path_index,
//! step, component)`: a ChaCha8 keystream keyed by the seed, with the path
//! index as stream id and the draw position as word counter. Paths can
//! therefore be generated in any order, on any thread, and the same bundle
//! drives every ε of a coupled experiment.
//!
//! Increments are stored on a dyadic lattice of spacing 2^−44 so that
//! Brownian-bridge refinement reproduces the coarse increments bit for bit
//! when the fine increments are summed back.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::special::inverse_normal_cdf;

/// Largest number of steps a refined grid may have.
pub const MAX_GRID_STEPS: usize = 1 << 24;

const LATTICE_SCALE: f64 = 17_592_186_044_416.0; // 2^44
const TAG_PATH: u64 = 0x7061_7468_5f69_6e63;
const TAG_REFINE: u64 = 0x7265_6669_6e65_5f62;

/// Uniform grid `t_j = j T / n`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::config(format!("horizon T = {horizon} must be positive and finite")));
        }
        if steps == 0 || steps > MAX_GRID_STEPS {
            return Err(Error::config(format!("steps = {steps} must lie in 1..={MAX_GRID_STEPS}")));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|j| self.node(j))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combine two words into a new key.
pub fn derive_key(key: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(key) ^ salt)
}

/// Counter-addressed random stream: `(key, stream, position)` fixes the output.
#[derive(Debug, Clone)]
pub struct CounterRng {
    inner: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(key: u64, stream: u64) -> Self {
        let mut seed = [0u8; 32];
        let mut state = key;
        for chunk in seed.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(stream);
        CounterRng { inner }
    }

    /// Position the stream at the `index`-th 64-bit draw.
    pub fn seek(&mut self, index: u64) {
        self.inner.set_word_pos(2 * index as u128);
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in the open interval (0, 1) from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal by inversion.
    pub fn normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }
}

fn to_lattice(x: f64) -> f64 {
    libm::round(x * LATTICE_SCALE) / LATTICE_SCALE
}

/// Brownian increments `ΔB_j = B_{t_{j+1}} − B_{t_j}` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    m: usize,
    increments: Vec<f64>,
    master_seed: u64,
    path_index: u64,
}

impl PathBundle {
    /// Wrap explicit increments (row-major, `steps × m`).
    pub fn from_increments(grid: TimeGrid, m: usize, increments: Vec<f64>) -> Result<Self> {
        if m == 0 || increments.len() != grid.steps() * m {
            return Err(Error::contract(format!("expected {} x {m} increments, got {}", grid.steps(), increments.len())));
        }
        Ok(PathBundle { grid, m, increments, master_seed: 0, path_index: 0 })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn noise_dim(&self) -> usize {
        self.m
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `ΔB_j` as an `m`-vector.
    pub fn increment(&self, step: usize) -> &[f64] {
        &self.increments[step * self.m..(step + 1) * self.m]
    }

    pub fn increment_mut(&mut self, step: usize) -> &mut [f64] {
        &mut self.increments[step * self.m..(step + 1) * self.m]
    }

    /// Sum each consecutive group of `factor` increments.
    pub fn coarsen(&self, factor: usize) -> Result<PathBundle> {
        let n = self.grid.steps();
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(Error::contract(format!("cannot coarsen {n} steps by {factor}")));
        }
        let grid = TimeGrid::new(self.grid.horizon(), n / factor)?;
        let mut out = vec![0.0; grid.steps() * self.m];
        for k in 0..grid.steps() {
            for c in 0..self.m {
                let mut acc = 0.0;
                for l in 0..factor {
                    acc += self.increments[(k * factor + l) * self.m + c];
                }
                out[k * self.m + c] = acc;
            }
        }
        Ok(PathBundle { grid, m: self.m, increments: out, master_seed: self.master_seed, path_index: self.path_index })
    }
}

/// Generate the bundle for `path_index` under `master_seed`.
pub fn make_path(master_seed: u64, path_index: u64, grid: TimeGrid, m: usize) -> Result<PathBundle> {
    if m == 0 {
        return Err(Error::contract("noise dimension m must be >= 1"));
    }
    let mut rng = CounterRng::new(derive_key(master_seed, TAG_PATH), path_index);
    let scale = libm::sqrt(grid.dt());
    let increments = (0..grid.steps() * m).map(|_| to_lattice(scale * rng.normal())).collect();
    Ok(PathBundle { grid, m, increments, master_seed, path_index })
}

/// Brownian-bridge refinement onto a grid `factor` times finer.
///
/// Summing each group of `factor` fine increments gives back the original
/// increments exactly. The fine detail is keyed by the bundle's seed, path
/// index, coarse size and factor.
pub fn refine_path(p: &PathBundle, factor: usize) -> Result<PathBundle> {
    if factor < 2 {
        return Err(Error::config(format!("refinement factor {factor} must be >= 2")));
    }
    let n = p.grid.steps();
    let fine_steps = n
        .checked_mul(factor)
        .filter(|s| *s <= MAX_GRID_STEPS)
        .ok_or_else(|| Error::config(format!("refining {n} steps by {factor} exceeds {MAX_GRID_STEPS} steps")))?;
    let grid = TimeGrid::new(p.grid.horizon(), fine_steps)?;
    let key = derive_key(derive_key(derive_key(p.master_seed, TAG_REFINE), n as u64), factor as u64);
    let mut rng = CounterRng::new(key, p.path_index);
    let scale = libm::sqrt(grid.dt());
    let m = p.m;
    let mut out = vec![0.0; fine_steps * m];
    let mut draws = vec![0.0; factor];
    for k in 0..n {
        for c in 0..m {
            let coarse = p.increments[k * m + c];
            for d in draws.iter_mut() {
                *d = scale * rng.normal();
            }
            let excess = (draws.iter().sum::<f64>() - coarse) / factor as f64;
            let mut partial = 0.0;
            for l in 0..factor - 1 {
                let v = to_lattice(draws[l] - excess);
                out[(k * factor + l) * m + c] = v;
                partial += v;
            }
            // lattice arithmetic is exact, so the group sums back to `coarse`
            out[(k * factor + factor - 1) * m + c] = coarse - partial;
        }
    }
    Ok(PathBundle { grid, m, increments: out, master_seed: p.master_seed, path_index: p.path_index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes() {
        let g = TimeGrid::new(0.1, 3).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes.len(), 4);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[3], 0.1);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn deterministic_and_distinct() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let a = make_path(42, 3, g, 2).unwrap();
        let b = make_path(42, 3, g, 2).unwrap();
        assert_eq!(a.increments(), b.increments());
        let c = make_path(42, 4, g, 2).unwrap();
        assert!(a.increments().iter().zip(c.increments()).any(|(x, y)| x != y));
        let d = make_path(43, 3, g, 2).unwrap();
        assert!(a.increments().iter().zip(d.increments()).any(|(x, y)| x != y));
    }

    #[test]
    fn order_independence() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let forward: Vec<_> = (0..20).map(|i| make_path(9, i, g, 1).unwrap()).collect();
        for i in (0..20).rev() {
            assert_eq!(make_path(9, i, g, 1).unwrap(), forward[i as usize]);
        }
    }

    #[test]
    fn seek_matches_sequential_draws() {
        let mut a = CounterRng::new(5, 2);
        let seq: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
        let mut b = CounterRng::new(5, 2);
        b.seek(7);
        assert_eq!(b.next_u64(), seq[7]);
    }

    #[test]
    fn refine_then_coarsen_is_identity() {
        let g = TimeGrid::new(1.0, 32).unwrap();
        for idx in 0..10 {
            let p = make_path(1, idx, g, 2).unwrap();
            for factor in [2, 3, 4, 8] {
                let fine = refine_path(&p, factor).unwrap();
                assert_eq!(fine.grid().steps(), 32 * factor);
                assert_eq!(fine.coarsen(factor).unwrap().increments(), p.increments());
            }
            let twice = refine_path(&refine_path(&p, 2).unwrap(), 2).unwrap();
            let once = refine_path(&p, 4).unwrap();
            assert_eq!(twice.coarsen(4).unwrap().increments(), once.coarsen(4).unwrap().increments());
        }
    }

    #[test]
    fn refine_rejects_bad_factors() {
        let p = make_path(1, 0, TimeGrid::new(1.0, 4).unwrap(), 1).unwrap();
        assert!(matches!(refine_path(&p, 1), Err(Error::Config(_))));
        assert!(matches!(refine_path(&p, MAX_GRID_STEPS), Err(Error::Config(_))));
    }

    #[test]
    fn from_increments_checks_shape() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(PathBundle::from_increments(g, 1, vec![0.0; 3]).is_err());
        assert!(PathBundle::from_increments(g, 2, vec![0.0; 8]).is_ok());
    }
}
