//! Statistical checks against closed-form oracles. Tolerances are three
//! Monte Carlo standard errors unless stated otherwise.

use volterra_clt_core::analysis::{holder_exponent, moment_curve, MomentAt};
use volterra_clt_core::kernels::{covariance_shape, kernel_covariance};
use volterra_clt_core::models::builtin_model;
use volterra_clt_core::paths::make_path;
use volterra_clt_core::special::gamma_fn;
use volterra_clt_core::{KernelSpec, QuadratureConfig, Scheme, SchemeConfig, TimeGrid, Trajectory};

fn sample_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    // standard error of the variance for near-Gaussian samples
    (var, var * (2.0 / (n - 1.0)).sqrt())
}

#[test]
fn brownian_increments_are_standard_normal() {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let scale = grid.dt().sqrt();
    let mut z = Vec::new();
    for idx in 0..200 {
        let p = make_path(2024, idx, grid, 2).unwrap();
        z.extend(p.increments().iter().map(|v| v / scale));
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let kurt = z.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
    assert!(mean.abs() < 3.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "var {var}");
    assert!((kurt - 3.0).abs() < 3.0 * (24.0 / n).sqrt(), "kurtosis {kurt}");
}

#[test]
fn rl_forcing_variance_follows_ito_isometry() {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let k = KernelSpec::riemann_liouville(0.7).unwrap();
    let scheme = Scheme::new(&k, &k, grid, &SchemeConfig::default()).unwrap();
    let model = builtin_model("linear-additive", 1, 1, &[0.0, 1.0]).unwrap();
    let eps = 0.25;
    let ends: Vec<f64> = (0..10_000)
        .map(|idx| {
            let p = make_path(7, idx, grid, 1).unwrap();
            *scheme.solve_perturbed(&model, &[0.0], eps, &p).unwrap().at(grid.steps()).first().unwrap()
        })
        .collect();
    let (var, se) = sample_variance(&ends);
    let discrete: f64 = scheme.diffusion_weights().row(grid.steps()).iter().map(|z| z * z * grid.dt()).sum();
    assert!((var - eps * discrete).abs() < 3.0 * se, "{var} vs {}", eps * discrete);
    let continuum = eps / (1.4 * gamma_fn(1.2).unwrap().powi(2));
    assert!((discrete * eps - continuum).abs() < 0.02 * continuum);
}

#[test]
fn ornstein_uhlenbeck_limit_variance() {
    let (a, c) = (-1.0f64, 0.8f64);
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let k = KernelSpec::constant(1.0).unwrap();
    let scheme = Scheme::new(&k, &k, grid, &SchemeConfig::default()).unwrap();
    let model = builtin_model("linear-additive", 1, 1, &[a, c]).unwrap();
    let skeleton = scheme.solve_deterministic(&model, &[1.0]).unwrap();
    let ends: Vec<f64> = (0..10_000)
        .map(|idx| {
            let p = make_path(8, idx, grid, 1).unwrap();
            scheme.solve_limit(&model, &skeleton, &p).unwrap().at(grid.steps())[0]
        })
        .collect();
    let (var, se) = sample_variance(&ends);
    let want = c * c * ((2.0 * a).exp() - 1.0) / (2.0 * a);
    assert!((var - want).abs() < 3.0 * se, "{var} vs {want}");
}

fn brownian_trajectories(k: &KernelSpec, grid: TimeGrid, paths: u64, seed: u64) -> Vec<Trajectory> {
    let scheme = Scheme::new(k, k, grid, &SchemeConfig::default()).unwrap();
    let model = builtin_model("linear-additive", 1, 1, &[0.0, 1.0]).unwrap();
    let skeleton = scheme.solve_deterministic(&model, &[0.0]).unwrap();
    (0..paths)
        .map(|idx| {
            let p = make_path(seed, idx, grid, 1).unwrap();
            scheme.solve_limit(&model, &skeleton, &p).unwrap()
        })
        .collect()
}

#[test]
fn moment_curve_of_brownian_forcing_is_linear_in_time() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let trajs = brownian_trajectories(&KernelSpec::constant(1.0).unwrap(), grid, 10_000, 9);
    let curve = moment_curve(&trajs, 2.0).unwrap();
    for j in [16, 32, 64] {
        let e = &curve.nodes[j];
        assert_eq!(e.at, MomentAt::Time(grid.node(j)));
        assert!((e.value - grid.node(j)).abs() < 3.0 * e.std_error, "node {j}: {e:?}");
    }
}

#[test]
fn moment_curve_of_rl_forcing_follows_discrete_isometry() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let k = KernelSpec::riemann_liouville(0.7).unwrap();
    let trajs = brownian_trajectories(&k, grid, 10_000, 10);
    let curve = moment_curve(&trajs, 2.0).unwrap();
    let scheme = Scheme::new(&k, &k, grid, &SchemeConfig::default()).unwrap();
    for j in [16, 32, 64] {
        let want: f64 = scheme.diffusion_weights().row(j).iter().map(|z| z * z * grid.dt()).sum();
        let e = &curve.nodes[j];
        assert!((e.value - want).abs() < 3.0 * e.std_error, "node {j}: {} vs {want}", e.value);
        let t = grid.node(j);
        let continuum = t.powf(1.4) / (1.4 * gamma_fn(1.2).unwrap().powi(2));
        assert!((want - continuum).abs() < 0.05 * continuum);
    }
}

#[test]
fn fbm_covariance_reconstruction_is_proportional() {
    let quad = QuadratureConfig::default();
    let times = [0.1, 0.3, 0.5, 0.7, 0.9];
    for h in [0.3, 0.7] {
        let k = KernelSpec::fbm(h).unwrap();
        let mut ratios = Vec::new();
        for &s in &times {
            for &t in &times {
                ratios.push(kernel_covariance(&k, s, t, &quad).unwrap() / covariance_shape(h, s, t));
            }
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo - 1.0 < 0.02, "H={h}: ratios in [{lo}, {hi}]");
    }
}

#[test]
fn synthesized_fbm_has_hurst_regularity() {
    let grid = TimeGrid::new(1.0, 1024).unwrap();
    for h in [0.3, 0.7] {
        let trajs = brownian_trajectories(&KernelSpec::fbm(h).unwrap(), grid, 300, 12);
        let est = holder_exponent(&trajs, 2.0, &[8, 16, 32, 64, 128]).unwrap();
        assert!((est.theta - h).abs() < 0.07, "H={h}: {est:?}");
    }
}
