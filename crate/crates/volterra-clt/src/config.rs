//! Experiment configuration: TOML text in, validated [`ExperimentConfig`] out.
//!
//! Grammar (every key optional unless noted):
//!
//! ```toml
//! experiment = "clt-rate"        # required: clt-rate | moments | kernel-check
//!                                #   | model-check | fbm-cov | holder
//! T = 1.0
//! steps = 512                    # power of two
//! paths = 1000
//! eps_ladder = [0.25, 0.125]     # strictly decreasing, inside (0, 1)
//! p_values = [2.0]
//! x0_set = [[1.0]]               # default: 5 points per axis on [-R, R]
//! R = 1.0
//! master_seed = 1
//! out_dir = "out"
//! spatial = false                # clt-rate: pairwise E max|Z^eps(x) - Z^eps(y)|^p
//! dump_paths = 4                 # paths written by --dump-trajectories
//! beta = 1.5                     # kernel-check
//! samples = 1000                 # model-check
//! box = [-5.0, 5.0]              # model-check sample box
//! holder_lags = [8, 16, 32, 64, 128]
//! holder_process = "Z"           # Z | Z_eps | X_eps
//! fbm_cov_times = [0.1, 0.3, 0.5, 0.7, 0.9]
//!
//! [model]
//! name = "sin-drift"             # zero | linear-additive | sin-drift | tanh-mixed
//! params = [1.0]
//! d = 1
//! m = 1
//!
//! [kernel_k1]                    # likewise [kernel_k2]
//! kind = "rl"                    # constant | rl | fbm
//! H = 0.7                        # rl and fbm
//! value = 1.0                    # constant
//!
//! [scheme]
//! drift_weighting = "kernel-integrated"   # or "left-point"
//!
//! [quad]
//! panels = 40
//! gauss_order = 10
//! singularity_split = 0.25
//! abs_tol = 1e-10
//! ```
//!
//! A run manifest is accepted as well; its `[config]` table is used.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use volterra_clt_core::models::builtin_model;
use volterra_clt_core::paths::MAX_GRID_STEPS;
use volterra_clt_core::solver::DriftWeighting;
use volterra_clt_core::{KernelKind, KernelSpec, ModelSpec, QuadratureConfig, SchemeConfig, TimeGrid};

pub const DEFAULT_STEPS: usize = 512;
pub const DEFAULT_PATHS: usize = 1000;
pub const DEFAULT_HOLDER_LAGS: [usize; 5] = [8, 16, 32, 64, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    CltRate,
    Moments,
    KernelCheck,
    ModelCheck,
    FbmCov,
    Holder,
}

impl Experiment {
    pub const ALL: [Experiment; 6] =
        [Experiment::CltRate, Experiment::Moments, Experiment::KernelCheck, Experiment::ModelCheck, Experiment::FbmCov, Experiment::Holder];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::CltRate => "clt-rate",
            Experiment::Moments => "moments",
            Experiment::KernelCheck => "kernel-check",
            Experiment::ModelCheck => "model-check",
            Experiment::FbmCov => "fbm-cov",
            Experiment::Holder => "holder",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }
}

/// Which trajectory the `holder` experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderProcess {
    Limit,
    Normalized,
    Perturbed,
}

impl HolderProcess {
    pub fn as_str(&self) -> &'static str {
        match self {
            HolderProcess::Limit => "Z",
            HolderProcess::Normalized => "Z_eps",
            HolderProcess::Perturbed => "X_eps",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub name: Option<String>,
    pub params: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    pub kind: Option<String>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScheme {
    pub drift_weighting: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQuad {
    pub panels: Option<usize>,
    pub gauss_order: Option<usize>,
    pub singularity_split: Option<f64>,
    pub abs_tol: Option<f64>,
}

/// The config file as written, before defaults and validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub eps_ladder: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub x0_set: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub master_seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub spatial: Option<bool>,
    pub dump_paths: Option<usize>,
    pub beta: Option<f64>,
    pub samples: Option<usize>,
    #[serde(rename = "box")]
    pub sample_box: Option<[f64; 2]>,
    pub holder_lags: Option<Vec<usize>>,
    pub holder_process: Option<String>,
    pub fbm_cov_times: Option<Vec<f64>>,
    pub model: Option<RawModel>,
    pub kernel_k1: Option<RawKernel>,
    pub kernel_k2: Option<RawKernel>,
    pub scheme: Option<RawScheme>,
    pub quad: Option<RawQuad>,
}

/// One problem found in a config, tagged with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub model_params: Vec<f64>,
    pub k1: KernelSpec,
    pub k2: KernelSpec,
    pub grid: TimeGrid,
    pub paths: usize,
    pub eps_ladder: Vec<f64>,
    pub p_values: Vec<f64>,
    pub x0_set: Vec<Vec<f64>>,
    pub radius: f64,
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub spatial: bool,
    pub dump_paths: usize,
    pub beta: f64,
    pub samples: usize,
    pub sample_box: [f64; 2],
    pub holder_lags: Vec<usize>,
    pub holder_process: HolderProcess,
    pub fbm_cov_times: Vec<f64>,
    pub scheme: SchemeConfig,
}

fn default_ladder() -> Vec<f64> {
    (2..=8).map(|k| 0.5f64.powi(k)).collect()
}

fn kernel_name(k: &KernelKind) -> &'static str {
    match k {
        KernelKind::Constant(_) => "constant",
        KernelKind::RiemannLiouville(_) => "rl",
        KernelKind::FbmMolchanGolosov(_) => "fbm",
    }
}

struct Collector(Vec<FieldError>);

impl Collector {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError { field: field.into(), message: message.into() });
    }
}

fn parse_kernel(raw: Option<&RawKernel>, field: &str, errs: &mut Collector) -> Option<KernelSpec> {
    let raw = raw.cloned().unwrap_or_default();
    let kind = raw.kind.as_deref().unwrap_or("constant");
    let needs_h = |errs: &mut Collector| -> Option<f64> {
        match raw.h {
            None => {
                errs.push(format!("{field}.H"), format!("kernel kind \"{kind}\" needs H in (0, 1)"));
                None
            }
            Some(h) if !(h > 0.0 && h < 1.0) => {
                errs.push(format!("{field}.H"), format!("H = {h} must lie in the open interval (0, 1)"));
                None
            }
            Some(h) => Some(h),
        }
    };
    let kernel = match kind {
        "constant" => {
            let v = raw.value.unwrap_or(1.0);
            if !v.is_finite() {
                errs.push(format!("{field}.value"), "constant kernel value must be finite");
                return None;
            }
            KernelSpec::constant(v)
        }
        "rl" => KernelSpec::riemann_liouville(needs_h(errs)?),
        "fbm" => KernelSpec::fbm(needs_h(errs)?),
        other => {
            errs.push(format!("{field}.kind"), format!("unknown kernel kind \"{other}\" (expected constant, rl or fbm)"));
            return None;
        }
    };
    match kernel {
        Ok(k) => Some(k),
        Err(e) => {
            errs.push(field, e.to_string());
            None
        }
    }
}

/// Parse config text (or a run manifest) and validate it, collecting every error.
pub fn validate(text: &str) -> Result<ExperimentConfig, Vec<FieldError>> {
    let raw = parse_raw(text).map_err(|e| vec![e])?;
    validate_raw(&raw)
}

pub fn parse_raw(text: &str) -> Result<RawConfig, FieldError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| FieldError { field: "config".into(), message: one_line(&e.to_string()) })?;
    let table = match table.get("config") {
        Some(toml::Value::Table(inner)) if table.contains_key("checksums") => inner.clone(),
        _ => table,
    };
    table.try_into().map_err(|e: toml::de::Error| FieldError { field: "config".into(), message: one_line(&e.to_string()) })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn validate_raw(raw: &RawConfig) -> Result<ExperimentConfig, Vec<FieldError>> {
    let mut errs = Collector(Vec::new());

    let experiment = match raw.experiment.as_deref() {
        None => {
            errs.push("experiment", "missing (expected one of clt-rate, moments, kernel-check, model-check, fbm-cov, holder)");
            None
        }
        Some(name) => {
            let e = Experiment::parse(name);
            if e.is_none() {
                errs.push("experiment", format!("unknown experiment \"{name}\""));
            }
            e
        }
    };

    let horizon = raw.horizon.unwrap_or(1.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        errs.push("T", format!("T = {horizon} must be positive"));
    }
    let steps = raw.steps.unwrap_or(DEFAULT_STEPS);
    if !steps.is_power_of_two() || steps > MAX_GRID_STEPS {
        errs.push("steps", format!("steps = {steps} must be a power of two no larger than {MAX_GRID_STEPS}"));
    }
    let grid = TimeGrid::new(if horizon > 0.0 && horizon.is_finite() { horizon } else { 1.0 }, steps.clamp(1, MAX_GRID_STEPS)).ok();

    let paths = raw.paths.unwrap_or(DEFAULT_PATHS);
    if paths < 2 {
        errs.push("paths", format!("paths = {paths} must be at least 2"));
    }

    let eps_ladder = raw.eps_ladder.clone().unwrap_or_else(default_ladder);
    if eps_ladder.is_empty() {
        errs.push("eps_ladder", "must not be empty");
    } else if eps_ladder.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        errs.push("eps_ladder", "every entry must lie in the open interval (0, 1)");
    } else if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        errs.push("eps_ladder", "must be strictly decreasing");
    }
    if experiment == Some(Experiment::CltRate) && eps_ladder.len() < 3 {
        errs.push("eps_ladder", "clt-rate needs at least 3 entries for the rate fit");
    }

    let p_values = raw.p_values.clone().unwrap_or_else(|| vec![2.0]);
    if p_values.is_empty() || p_values.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
        errs.push("p_values", "needs at least one entry, each >= 1");
    }
    if experiment == Some(Experiment::Holder) && p_values.iter().any(|p| *p < 2.0) {
        errs.push("p_values", "holder needs every p >= 2");
    }

    let model_raw = raw.model.clone().unwrap_or_default();
    let (d, m) = (model_raw.d.unwrap_or(1), model_raw.m.unwrap_or(1));
    let model_params = model_raw.params.clone().unwrap_or_default();
    let model = match model_raw.name.as_deref() {
        None if matches!(experiment, Some(Experiment::KernelCheck | Experiment::FbmCov)) => builtin_model("zero", d, m, &[]).ok(),
        None => {
            errs.push("model.name", "missing (expected zero, linear-additive, sin-drift or tanh-mixed)");
            None
        }
        Some(name) => match builtin_model(name, d, m, &model_params) {
            Ok(mo) => Some(mo),
            Err(e) => {
                errs.push("model", e.to_string());
                None
            }
        },
    };

    let k1 = parse_kernel(raw.kernel_k1.as_ref(), "kernel_k1", &mut errs);
    let k2 = parse_kernel(raw.kernel_k2.as_ref(), "kernel_k2", &mut errs);

    let radius = raw.radius.unwrap_or(1.0);
    if !(radius > 0.0 && radius.is_finite()) {
        errs.push("R", format!("R = {radius} must be positive"));
    }
    let x0_set = match &raw.x0_set {
        Some(set) => {
            if set.is_empty() || set.iter().any(|x| x.len() != d || x.iter().any(|v| !v.is_finite())) {
                errs.push("x0_set", format!("needs at least one point, each a finite vector of length d = {d}"));
            }
            set.clone()
        }
        None => {
            let axis: Vec<f64> = (0..5).map(|k| -radius + 0.5 * radius * k as f64).collect();
            match d {
                1 => axis.iter().map(|a| vec![*a]).collect(),
                2 => axis.iter().flat_map(|a| axis.iter().map(move |b| vec![*a, *b])).collect(),
                _ => {
                    errs.push("x0_set", "no default for d > 2; list the initial points explicitly");
                    Vec::new()
                }
            }
        }
    };

    let beta = raw.beta.unwrap_or(1.5);
    if !(beta > 1.0 && beta.is_finite()) {
        errs.push("beta", format!("beta = {beta} must be > 1"));
    }
    let samples = raw.samples.unwrap_or(1000);
    if samples < 100 {
        errs.push("samples", format!("samples = {samples} must be at least 100"));
    }
    let sample_box = raw.sample_box.unwrap_or([-5.0, 5.0]);
    if !(sample_box[0] < sample_box[1]) || sample_box.iter().any(|v| !v.is_finite()) {
        errs.push("box", "needs finite lo < hi");
    }

    let holder_lags = raw.holder_lags.clone().unwrap_or_else(|| DEFAULT_HOLDER_LAGS.to_vec());
    if experiment == Some(Experiment::Holder) {
        let mut distinct = holder_lags.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 || holder_lags.iter().any(|l| *l == 0 || *l > steps) {
            errs.push("holder_lags", format!("needs at least two distinct lags in 1..={steps}"));
        }
    }
    let holder_process = match raw.holder_process.as_deref().unwrap_or("Z") {
        "Z" => HolderProcess::Limit,
        "Z_eps" => HolderProcess::Normalized,
        "X_eps" => HolderProcess::Perturbed,
        other => {
            errs.push("holder_process", format!("unknown process \"{other}\" (expected Z, Z_eps or X_eps)"));
            HolderProcess::Limit
        }
    };

    let fbm_cov_times = raw.fbm_cov_times.clone().unwrap_or_else(|| vec![0.1, 0.3, 0.5, 0.7, 0.9]);
    if experiment == Some(Experiment::FbmCov) {
        if fbm_cov_times.is_empty() || fbm_cov_times.iter().any(|t| !(*t > 0.0 && *t <= horizon)) {
            errs.push("fbm_cov_times", format!("needs at least one time in (0, {horizon}]"));
        }
        if let Some(k) = &k2 {
            if !matches!(k.kind(), KernelKind::FbmMolchanGolosov(_)) {
                errs.push("kernel_k2.kind", format!("fbm-cov needs an fbm kernel, got {}", kernel_name(&k.kind())));
            }
        }
    }

    let drift_weighting = match raw.scheme.as_ref().and_then(|s| s.drift_weighting.as_deref()).unwrap_or("kernel-integrated") {
        "kernel-integrated" => DriftWeighting::KernelIntegrated,
        "left-point" => DriftWeighting::LeftPoint,
        other => {
            errs.push("scheme.drift_weighting", format!("unknown weighting \"{other}\" (expected kernel-integrated or left-point)"));
            DriftWeighting::KernelIntegrated
        }
    };
    let q = raw.quad.clone().unwrap_or_default();
    let defaults = QuadratureConfig::default();
    let quad = QuadratureConfig {
        panels: q.panels.unwrap_or(defaults.panels),
        gauss_order: q.gauss_order.unwrap_or(defaults.gauss_order),
        singularity_split: q.singularity_split.unwrap_or(defaults.singularity_split),
        abs_tol: q.abs_tol.unwrap_or(defaults.abs_tol),
    };
    if let Err(e) = quad.validate() {
        errs.push("quad", e.to_string());
    }

    let dump_paths = raw.dump_paths.unwrap_or(4);

    if !errs.0.is_empty() {
        return Err(errs.0);
    }
    Ok(ExperimentConfig {
        experiment: experiment.unwrap(),
        model: model.unwrap(),
        model_params,
        k1: k1.unwrap(),
        k2: k2.unwrap(),
        grid: grid.unwrap(),
        paths,
        eps_ladder,
        p_values,
        x0_set,
        radius,
        master_seed: raw.master_seed.unwrap_or(1),
        out_dir: raw.out_dir.clone(),
        spatial: raw.spatial.unwrap_or(false),
        dump_paths,
        beta,
        samples,
        sample_box,
        holder_lags,
        holder_process,
        fbm_cov_times,
        scheme: SchemeConfig { drift_weighting, quad, ..SchemeConfig::default() },
    })
}

fn raw_kernel(k: &KernelSpec) -> RawKernel {
    match k.kind() {
        KernelKind::Constant(v) => RawKernel { kind: Some("constant".into()), h: None, value: Some(v) },
        kind @ (KernelKind::RiemannLiouville(h) | KernelKind::FbmMolchanGolosov(h)) => {
            RawKernel { kind: Some(kernel_name(&kind).into()), h: Some(h), value: None }
        }
    }
}

impl ExperimentConfig {
    /// The fully resolved config, defaults filled in; validating it yields
    /// the same run.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            experiment: Some(self.experiment.as_str().into()),
            horizon: Some(self.grid.horizon()),
            steps: Some(self.grid.steps()),
            paths: Some(self.paths),
            eps_ladder: Some(self.eps_ladder.clone()),
            p_values: Some(self.p_values.clone()),
            x0_set: Some(self.x0_set.clone()),
            radius: Some(self.radius),
            master_seed: Some(self.master_seed),
            out_dir: self.out_dir.clone(),
            spatial: Some(self.spatial),
            dump_paths: Some(self.dump_paths),
            beta: Some(self.beta),
            samples: Some(self.samples),
            sample_box: Some(self.sample_box),
            holder_lags: Some(self.holder_lags.clone()),
            holder_process: Some(self.holder_process.as_str().into()),
            fbm_cov_times: Some(self.fbm_cov_times.clone()),
            model: Some(RawModel {
                name: Some(self.model.name().into()),
                params: Some(self.model_params.clone()),
                d: Some(volterra_clt_core::Coefficients::state_dim(&self.model)),
                m: Some(volterra_clt_core::Coefficients::noise_dim(&self.model)),
            }),
            kernel_k1: Some(raw_kernel(&self.k1)),
            kernel_k2: Some(raw_kernel(&self.k2)),
            scheme: Some(RawScheme {
                drift_weighting: Some(
                    match self.scheme.drift_weighting {
                        DriftWeighting::KernelIntegrated => "kernel-integrated",
                        DriftWeighting::LeftPoint => "left-point",
                    }
                    .into(),
                ),
            }),
            quad: Some(RawQuad {
                panels: Some(self.scheme.quad.panels),
                gauss_order: Some(self.scheme.quad.gauss_order),
                singularity_split: Some(self.scheme.quad.singularity_split),
                abs_tol: Some(self.scheme.quad.abs_tol),
            }),
        }
    }
}
