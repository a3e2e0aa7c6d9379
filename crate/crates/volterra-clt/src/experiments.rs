//! The six experiment kinds.
//!
//! Paths are simulated in parallel batches; each batch is collected in path
//! order and folded into the estimators sequentially, so every number
//! written is independent of the worker count.

use std::path::PathBuf;

use rayon::prelude::*;
use volterra_clt_core::analysis::{
    check_hk1, check_hk2, check_model, moment_from_samples, sup_gap, HolderEstimate, HypothesisReport, IncrementMoments, MomentAt,
    MomentCurve, MomentCurveReport, MomentEstimate, RateReport, SampleBox,
};
use volterra_clt_core::kernels::{covariance_shape, fbm_variance_constant, kernel_covariance, PanelRule};
use volterra_clt_core::models::frobenius;
use volterra_clt_core::paths::make_path;
use volterra_clt_core::solver::{diffusion_weight_row, drift_weight_row, normalized_error, Weights};
use volterra_clt_core::{Coefficients, Scheme, Trajectory};

use crate::config::{Experiment, ExperimentConfig, HolderProcess};
use crate::output::{fmt_f64, unix_ms, OutputDir};
use crate::RunError;

const BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub threads: usize,
    pub seed: Option<u64>,
    pub strict: bool,
    pub dump_trajectories: bool,
}

/// `E|·|^p` per node of one process at one initial point.
#[derive(Debug, Clone)]
pub struct MomentRecord {
    pub label: &'static str,
    pub eps: Option<f64>,
    pub x_index: usize,
    pub report: MomentCurveReport,
}

/// `E max_j |Z^ε_{t_j}(x_i) − Z^ε_{t_j}(x_k)|^p` for one pair of initial points.
#[derive(Debug, Clone)]
pub struct SpatialRecord {
    pub eps: f64,
    pub x_i: usize,
    pub x_k: usize,
    pub distance: f64,
    pub estimate: MomentEstimate,
    /// `estimate / distance^p`.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CovarianceRecord {
    pub hurst: f64,
    pub s: f64,
    pub t: f64,
    pub integral: f64,
    pub shape: f64,
    pub ratio: f64,
}

/// Everything a run computed, alongside the files it wrote.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub files: Vec<String>,
    pub manifest: PathBuf,
    pub rates: Vec<RateReport>,
    pub moments: Vec<MomentRecord>,
    pub spatial: Vec<SpatialRecord>,
    pub hypotheses: Vec<HypothesisReport>,
    pub holder: Vec<HolderEstimate>,
    pub covariance: Vec<CovarianceRecord>,
}

impl From<volterra_clt_core::Error> for RunError {
    fn from(e: volterra_clt_core::Error) -> Self {
        match e {
            volterra_clt_core::Error::Divergence { .. } => RunError::Divergence(e.to_string()),
            volterra_clt_core::Error::Config(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

/// Run one experiment, write its tables and the manifest.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let started = unix_ms();
    if opts.threads == 0 {
        return Err(RunError::Config("threads: must be at least 1".into()));
    }
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.master_seed = seed;
    }
    cfg.out_dir = Some(opts.out_dir.clone());
    let mut out = OutputDir::create(&opts.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build().map_err(|e| RunError::Config(format!("threads: {e}")))?;

    let mut summary = pool.install(|| match cfg.experiment {
        Experiment::CltRate | Experiment::Moments => simulate(&cfg, opts, &mut out),
        Experiment::KernelCheck => kernel_check(&cfg, &mut out),
        Experiment::ModelCheck => model_check(&cfg, &mut out),
        Experiment::FbmCov => fbm_cov(&cfg, &mut out),
        Experiment::Holder => holder(&cfg, &mut out),
    })?;
    summary.manifest = out.write_manifest(&cfg.to_raw(), started)?;
    summary.files = out.files().to_vec();

    if opts.strict {
        if let Some(bad) = summary.hypotheses.iter().find(|h| !h.passed) {
            let why = bad.violation.clone().unwrap_or_else(|| "check did not pass".into());
            return Err(RunError::Hypothesis(format!("{}: {why}", bad.name.as_str())));
        }
    }
    Ok(summary)
}

/// Weight matrices for the configured kernels, rows built in parallel.
pub fn build_scheme(cfg: &ExperimentConfig) -> Result<Scheme, RunError> {
    let grid = cfg.grid;
    let rule = PanelRule::new(&cfg.scheme.quad)?;
    let n = grid.steps();
    let drift: Vec<Vec<f64>> =
        (1..=n).into_par_iter().map(|j| drift_weight_row(&cfg.k1, &grid, &cfg.scheme, &rule, j)).collect::<Result<_, _>>()?;
    let diffusion: Vec<Vec<f64>> =
        (1..=n).into_par_iter().map(|j| diffusion_weight_row(&cfg.k2, &grid, &rule, j)).collect::<Result<_, _>>()?;
    Ok(Scheme::from_weights(grid, Weights::from_rows(n, drift)?, Weights::from_rows(n, diffusion)?)?)
}

fn node_norms(t: &Trajectory) -> Vec<f64> {
    (0..t.len()).map(|j| frobenius(t.at(j))).collect()
}

fn eps_tag(eps: f64) -> String {
    fmt_f64(eps)
}

struct PathOutcome {
    index: u64,
    /// `max_x max_j |Z^ε − Z|`, one per ε.
    rate_gaps: Vec<f64>,
    /// Per initial point: node norms of `Z`, then of `Z^ε` for each ε.
    norms: Vec<Vec<Vec<f64>>>,
    /// One per (ε, pair).
    spatial_gaps: Vec<f64>,
    dumps: Vec<(String, Trajectory)>,
}

fn simulate(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut OutputDir) -> Result<RunSummary, RunError> {
    let scheme = build_scheme(cfg)?;
    let model = &cfg.model;
    let skeletons = cfg.x0_set.iter().map(|x| scheme.solve_deterministic(model, x)).collect::<Result<Vec<_>, _>>()?;
    let nx = cfg.x0_set.len();
    let pairs: Vec<(usize, usize)> =
        if cfg.spatial { (0..nx).flat_map(|i| (i + 1..nx).map(move |k| (i, k))).collect() } else { Vec::new() };
    let slots = 1 + cfg.eps_ladder.len();
    let dump_limit = if opts.dump_trajectories { cfg.dump_paths as u64 } else { 0 };

    let one_path = |index: u64| -> Result<PathOutcome, RunError> {
        let path = make_path(cfg.master_seed, index, cfg.grid, model.noise_dim())?;
        let dump = index < dump_limit;
        let mut rate_gaps = vec![0.0f64; cfg.eps_ladder.len()];
        let mut norms = Vec::with_capacity(nx);
        let mut zeps_all: Vec<Vec<Trajectory>> = Vec::with_capacity(nx);
        let mut dumps = Vec::new();
        for (xi, x0) in cfg.x0_set.iter().enumerate() {
            let z = scheme.solve_limit(model, &skeletons[xi], &path)?;
            let mut per_x = Vec::with_capacity(slots);
            per_x.push(node_norms(&z));
            let mut zeps_x = Vec::new();
            for (e, &eps) in cfg.eps_ladder.iter().enumerate() {
                let xe = scheme.solve_perturbed(model, x0, eps, &path)?;
                let ze = normalized_error(&xe, &skeletons[xi], eps)?;
                rate_gaps[e] = rate_gaps[e].max(sup_gap(&ze, &z)?);
                per_x.push(node_norms(&ze));
                if dump {
                    let tag = eps_tag(eps);
                    dumps.push((format!("trajectories/X_eps_eps{tag}_x{xi}_path{index}.csv"), xe));
                    dumps.push((format!("trajectories/Z_eps_eps{tag}_x{xi}_path{index}.csv"), ze.clone()));
                }
                if !pairs.is_empty() {
                    zeps_x.push(ze);
                }
            }
            if dump {
                dumps.push((format!("trajectories/Z_x{xi}_path{index}.csv"), z));
            }
            norms.push(per_x);
            zeps_all.push(zeps_x);
        }
        let spatial_gaps = (0..cfg.eps_ladder.len())
            .flat_map(|e| pairs.iter().map(move |&(i, k)| (e, i, k)))
            .map(|(e, i, k)| sup_gap(&zeps_all[i][e], &zeps_all[k][e]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathOutcome { index, rate_gaps, norms, spatial_gaps, dumps })
    };

    let mut curves: Vec<MomentCurve> = Vec::with_capacity(nx * slots * cfg.p_values.len());
    for _ in 0..nx * slots {
        for &p in &cfg.p_values {
            curves.push(MomentCurve::new(cfg.grid, p)?);
        }
    }
    let mut rate_samples: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.paths); cfg.eps_ladder.len()];
    let mut spatial_samples: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.paths); cfg.eps_ladder.len() * pairs.len()];

    if opts.dump_trajectories {
        for (xi, s) in skeletons.iter().enumerate() {
            out.write_trajectory(&format!("trajectories/X0_x{xi}.csv"), s)?;
        }
    }
    let total = cfg.paths as u64;
    let mut start = 0u64;
    while start < total {
        let end = (start + BATCH as u64).min(total);
        let batch: Vec<PathOutcome> = (start..end).into_par_iter().map(one_path).collect::<Result<_, _>>()?;
        for (o, expected) in batch.into_iter().zip(start..end) {
            debug_assert_eq!(o.index, expected);
            for (e, g) in o.rate_gaps.iter().enumerate() {
                rate_samples[e].push(*g);
            }
            for (k, g) in o.spatial_gaps.iter().enumerate() {
                spatial_samples[k].push(*g);
            }
            for (xi, per_x) in o.norms.iter().enumerate() {
                for (slot, mags) in per_x.iter().enumerate() {
                    for (pi, _) in cfg.p_values.iter().enumerate() {
                        curves[(xi * slots + slot) * cfg.p_values.len() + pi].push_magnitudes(mags)?;
                    }
                }
            }
            for (name, traj) in &o.dumps {
                out.write_trajectory(name, traj)?;
            }
        }
        start = end;
    }

    let mut summary = RunSummary::default();

    // moments.csv
    let mut rows = Vec::new();
    for xi in 0..nx {
        for slot in 0..slots {
            for (pi, &p) in cfg.p_values.iter().enumerate() {
                let report = curves[(xi * slots + slot) * cfg.p_values.len() + pi].finish()?;
                let (label, eps) = if slot == 0 { ("Z", None) } else { ("Z_eps", Some(cfg.eps_ladder[slot - 1])) };
                for (j, est) in report.nodes.iter().enumerate() {
                    rows.push(vec![
                        fmt_f64(cfg.grid.node(j)),
                        fmt_f64(p),
                        fmt_f64(est.value),
                        fmt_f64(est.std_error),
                        label.to_string(),
                        eps.map(fmt_f64).unwrap_or_default(),
                        xi.to_string(),
                    ]);
                }
                summary.moments.push(MomentRecord { label, eps, x_index: xi, report });
            }
        }
    }
    out.write_csv("moments.csv", &["t", "p", "estimate", "std_error", "label", "eps", "x_index"], &rows)?;

    if cfg.experiment == Experiment::CltRate {
        let mut rows = Vec::new();
        let mut fit_rows = Vec::new();
        for &p in &cfg.p_values {
            let errors = rate_samples.iter().map(|g| moment_from_samples(g, p, MomentAt::SupOverGrid)).collect::<Result<Vec<_>, _>>()?;
            let report = RateReport::new(p, cfg.eps_ladder.clone(), errors)?;
            for (e, est) in report.errors.iter().enumerate() {
                rows.push(vec![
                    fmt_f64(report.eps_ladder[e]),
                    fmt_f64(p),
                    fmt_f64(est.value),
                    fmt_f64(est.root),
                    fmt_f64(est.std_error),
                    est.paths.to_string(),
                    cfg.grid.steps().to_string(),
                    if report.exact[e] { "exact" } else { "ok" }.to_string(),
                ]);
            }
            fit_rows.push(match report.fit {
                Some(f) => {
                    vec![fmt_f64(p), fmt_f64(f.slope), fmt_f64(f.intercept), fmt_f64(f.r_squared), f.points.to_string(), "ok".to_string()]
                }
                None => vec![fmt_f64(p), String::new(), String::new(), String::new(), "0".to_string(), "exact".to_string()],
            });
            summary.rates.push(report);
        }
        out.write_csv("rate.csv", &["eps", "p", "lp_error", "lp_error_pth_root", "std_error", "paths", "steps", "status"], &rows)?;
        out.write_csv("rate_fit.csv", &["p", "slope", "intercept", "r_squared", "points", "status"], &fit_rows)?;

        if !pairs.is_empty() {
            let mut rows = Vec::new();
            for (e, &eps) in cfg.eps_ladder.iter().enumerate() {
                for (q, &(i, k)) in pairs.iter().enumerate() {
                    let diff: Vec<f64> = cfg.x0_set[i].iter().zip(&cfg.x0_set[k]).map(|(a, b)| a - b).collect();
                    let distance = frobenius(&diff);
                    for &p in &cfg.p_values {
                        let estimate = moment_from_samples(&spatial_samples[e * pairs.len() + q], p, MomentAt::SupOverGrid)?;
                        let ratio = estimate.value / distance.powf(p);
                        rows.push(vec![
                            fmt_f64(eps),
                            fmt_f64(p),
                            i.to_string(),
                            k.to_string(),
                            fmt_f64(distance),
                            fmt_f64(estimate.value),
                            fmt_f64(estimate.std_error),
                            fmt_f64(ratio),
                        ]);
                        summary.spatial.push(SpatialRecord { eps, x_i: i, x_k: k, distance, estimate, ratio });
                    }
                }
            }
            out.write_csv("spatial.csv", &["eps", "p", "x_i", "x_j", "distance", "estimate", "std_error", "ratio"], &rows)?;
        }
    }
    Ok(summary)
}

fn write_hypotheses(reports: &[HypothesisReport], out: &mut OutputDir) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let mut evidence = Vec::new();
    for r in reports {
        let passed = r.passed.to_string();
        for (k, v) in &r.parameters {
            rows.push(vec![r.name.as_str().to_string(), k.clone(), fmt_f64(*v), passed.clone()]);
        }
        if let Some(v) = &r.violation {
            rows.push(vec![r.name.as_str().to_string(), "violation".to_string(), v.clone(), passed.clone()]);
        }
        for e in &r.evidence {
            evidence.push(vec![r.name.as_str().to_string(), e.label.clone(), fmt_f64(e.at), fmt_f64(e.value)]);
        }
    }
    out.write_csv("hypcheck.csv", &["name", "parameter", "value", "passed"], &rows)?;
    out.write_csv("hypcheck_evidence.csv", &["name", "label", "at", "value"], &evidence)
}

fn kernel_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunSummary, RunError> {
    let quad = &cfg.scheme.quad;
    let reports = vec![check_hk1(&cfg.k1, &cfg.k2, cfg.beta, &cfg.grid, quad)?, check_hk2(&cfg.k1, &cfg.k2, &cfg.grid, quad)?];
    write_hypotheses(&reports, out)?;
    Ok(RunSummary { hypotheses: reports, ..Default::default() })
}

fn model_check(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunSummary, RunError> {
    let region = SampleBox { lo: cfg.sample_box[0], hi: cfg.sample_box[1], horizon: cfg.grid.horizon() };
    let reports = check_model(&cfg.model, cfg.samples, region, cfg.master_seed)?.to_vec();
    write_hypotheses(&reports, out)?;
    Ok(RunSummary { hypotheses: reports, ..Default::default() })
}

fn fbm_cov(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunSummary, RunError> {
    let h = cfg.k2.hurst().ok_or_else(|| RunError::Config("kernel_k2.H: fbm-cov needs a Hurst parameter".into()))?;
    let times = &cfg.fbm_cov_times;
    let grid_pairs: Vec<(f64, f64)> = times.iter().flat_map(|s| times.iter().map(move |t| (*s, *t))).collect();
    let records = grid_pairs
        .par_iter()
        .map(|&(s, t)| {
            let integral = kernel_covariance(&cfg.k2, s, t, &cfg.scheme.quad)?;
            let shape = covariance_shape(h, s, t);
            Ok(CovarianceRecord { hurst: h, s, t, integral, shape, ratio: integral / shape })
        })
        .collect::<Result<Vec<_>, volterra_clt_core::Error>>()?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| vec![fmt_f64(r.hurst), fmt_f64(r.s), fmt_f64(r.t), fmt_f64(r.integral), fmt_f64(r.shape), fmt_f64(r.ratio)])
        .collect();
    out.write_csv("fbm_cov.csv", &["H", "s", "t", "integral", "shape", "ratio"], &rows)?;
    let lo = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = records.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let summary_row = vec![fmt_f64(h), fmt_f64(lo), fmt_f64(hi), fmt_f64(hi / lo - 1.0), fmt_f64(fbm_variance_constant(h)?)];
    out.write_csv("fbm_cov_summary.csv", &["H", "ratio_min", "ratio_max", "spread", "variance_constant"], &[summary_row])?;
    Ok(RunSummary { covariance: records, ..Default::default() })
}

fn holder(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RunSummary, RunError> {
    let scheme = build_scheme(cfg)?;
    let model = &cfg.model;
    let x0 = &cfg.x0_set[0];
    let eps = cfg.eps_ladder[0];
    let skeleton = scheme.solve_deterministic(model, x0)?;
    let one_path = |index: u64| -> Result<Trajectory, RunError> {
        let path = make_path(cfg.master_seed, index, cfg.grid, model.noise_dim())?;
        Ok(match cfg.holder_process {
            HolderProcess::Limit => scheme.solve_limit(model, &skeleton, &path)?,
            HolderProcess::Perturbed => scheme.solve_perturbed(model, x0, eps, &path)?,
            HolderProcess::Normalized => normalized_error(&scheme.solve_perturbed(model, x0, eps, &path)?, &skeleton, eps)?,
        })
    };
    let mut accs = cfg.p_values.iter().map(|&p| IncrementMoments::new(cfg.grid, p, &cfg.holder_lags)).collect::<Result<Vec<_>, _>>()?;
    let total = cfg.paths as u64;
    let mut start = 0u64;
    while start < total {
        let end = (start + BATCH as u64).min(total);
        let batch: Vec<Trajectory> = (start..end).into_par_iter().map(one_path).collect::<Result<_, _>>()?;
        for traj in &batch {
            for acc in accs.iter_mut() {
                acc.push(traj)?;
            }
        }
        start = end;
    }
    let estimates = accs.iter().map(|a| a.finish()).collect::<Result<Vec<_>, _>>()?;
    let process = cfg.holder_process.as_str();
    let mut rows = Vec::new();
    let mut fit_rows = Vec::new();
    let mut lags = cfg.holder_lags.clone();
    lags.sort_unstable();
    lags.dedup();
    for est in &estimates {
        for (k, lag) in lags.iter().enumerate() {
            rows.push(vec![process.to_string(), fmt_f64(est.p), lag.to_string(), fmt_f64(est.lag_times[k]), fmt_f64(est.moments[k])]);
        }
        fit_rows.push(vec![process.to_string(), fmt_f64(est.p), fmt_f64(est.theta), fmt_f64(est.r_squared)]);
    }
    out.write_csv("holder.csv", &["process", "p", "lag", "lag_time", "moment"], &rows)?;
    out.write_csv("holder_fit.csv", &["process", "p", "theta", "r_squared"], &fit_rows)?;
    Ok(RunSummary { holder: estimates, ..Default::default() })
}
