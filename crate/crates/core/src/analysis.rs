//! Monte Carlo estimators, log-log regressions and numerical checks of the
//! kernel and coefficient hypotheses.
//!
//! Estimators are fed one path at a time in path-index order; the result
//! therefore does not depend on how the paths were produced.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{kernel_pow_integral_quadrature, kernel_time_modulus, KernelSpec};
use crate::models::{frobenius, Coefficients, ModelSpec};
use crate::paths::{CounterRng, TimeGrid};
use crate::quadrature::QuadratureConfig;
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentAt {
    Time(f64),
    SupOverGrid,
}

/// Monte Carlo estimate of `E|Y|^p` together with its `p`-th root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    pub std_error: f64,
    /// `value^(1/p)`.
    pub root: f64,
    /// Jackknife standard error of `root`.
    pub root_std_error: f64,
    pub paths: usize,
    pub at: MomentAt,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::contract(format!("moment order p = {p} must be >= 1")))
    }
}

/// `E|Y|^p` from samples of `|Y|`, with jackknife standard errors.
pub fn moment_from_samples(magnitudes: &[f64], p: f64, at: MomentAt) -> Result<MomentEstimate> {
    check_p(p)?;
    let n = magnitudes.len();
    if n < 2 {
        return Err(Error::contract(format!("need at least 2 paths, got {n}")));
    }
    let powered: Vec<f64> = magnitudes.iter().map(|v| libm::pow(libm::fabs(*v), p)).collect();
    let total: f64 = powered.iter().sum();
    let nf = n as f64;
    let mean = total / nf;
    let mut loo_roots = Vec::with_capacity(n);
    let mut var = 0.0;
    for y in &powered {
        var += (y - mean) * (y - mean);
        let loo = ((total - y) / (nf - 1.0)).max(0.0);
        loo_roots.push(libm::pow(loo, 1.0 / p));
    }
    // jackknife of the mean is the usual s/√n
    let std_error = libm::sqrt(var / (nf - 1.0) / nf);
    let loo_mean = loo_roots.iter().sum::<f64>() / nf;
    let jack: f64 = loo_roots.iter().map(|r| (r - loo_mean) * (r - loo_mean)).sum();
    let root_std_error = libm::sqrt((nf - 1.0) / nf * jack);
    Ok(MomentEstimate { p, value: mean, std_error, root: libm::pow(mean, 1.0 / p), root_std_error, paths: n, at })
}

/// `max_j |a_{t_j} − b_{t_j}|` (Euclidean norm in state space).
pub fn sup_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    a.check_compatible(b)?;
    let d = a.dim();
    let mut worst = 0.0f64;
    for j in 0..a.len() {
        let (x, y) = (a.at(j), b.at(j));
        let mut sq = 0.0;
        for c in 0..d {
            sq += (x[c] - y[c]) * (x[c] - y[c]);
        }
        worst = worst.max(libm::sqrt(sq));
    }
    Ok(worst)
}

/// `E[max_j |a − b|^p]` over paths.
pub fn lp_error_sup(pairs: &[(Trajectory, Trajectory)], p: f64) -> Result<MomentEstimate> {
    let gaps = pairs.iter().map(|(a, b)| sup_gap(a, b)).collect::<Result<Vec<_>>>()?;
    moment_from_samples(&gaps, p, MomentAt::SupOverGrid)
}

/// Per-node running moments `E|Y_{t_j}|^p`, accumulated path by path.
#[derive(Debug, Clone)]
pub struct MomentCurve {
    grid: TimeGrid,
    p: f64,
    paths: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MomentCurve {
    pub fn new(grid: TimeGrid, p: f64) -> Result<Self> {
        check_p(p)?;
        let nodes = grid.steps() + 1;
        Ok(MomentCurve { grid, p, paths: 0, mean: vec![0.0; nodes], m2: vec![0.0; nodes] })
    }

    /// Add one path given as per-node magnitudes `|Y_{t_j}|`.
    pub fn push_magnitudes(&mut self, magnitudes: &[f64]) -> Result<()> {
        if magnitudes.len() != self.mean.len() {
            return Err(Error::contract(format!("expected {} node values, got {}", self.mean.len(), magnitudes.len())));
        }
        self.paths += 1;
        let k = self.paths as f64;
        for (j, v) in magnitudes.iter().enumerate() {
            let y = libm::pow(libm::fabs(*v), self.p);
            let delta = y - self.mean[j];
            self.mean[j] += delta / k;
            self.m2[j] += delta * (y - self.mean[j]);
        }
        Ok(())
    }

    pub fn push(&mut self, traj: &Trajectory) -> Result<()> {
        if *traj.grid() != self.grid {
            return Err(Error::contract("trajectory grid differs from the moment curve grid"));
        }
        let mags: Vec<f64> = (0..traj.len()).map(|j| frobenius(traj.at(j))).collect();
        self.push_magnitudes(&mags)
    }

    pub fn finish(&self) -> Result<MomentCurveReport> {
        if self.paths < 2 {
            return Err(Error::contract(format!("need at least 2 paths, got {}", self.paths)));
        }
        let n = self.paths as f64;
        let nodes: Vec<MomentEstimate> = self
            .mean
            .iter()
            .zip(&self.m2)
            .enumerate()
            .map(|(j, (mean, m2))| {
                let std_error = libm::sqrt(m2 / (n - 1.0) / n);
                let root = libm::pow(*mean, 1.0 / self.p);
                // delta method for the root
                let root_std_error = if *mean > 0.0 { root / (self.p * mean) * std_error } else { 0.0 };
                MomentEstimate {
                    p: self.p,
                    value: *mean,
                    std_error,
                    root,
                    root_std_error,
                    paths: self.paths,
                    at: MomentAt::Time(self.grid.node(j)),
                }
            })
            .collect();
        let argmax = nodes.iter().enumerate().fold(0, |best, (j, e)| if e.value > nodes[best].value { j } else { best });
        Ok(MomentCurveReport { nodes, argmax })
    }
}

#[derive(Debug, Clone)]
pub struct MomentCurveReport {
    pub nodes: Vec<MomentEstimate>,
    /// Node index of the largest estimate (`sup_t E|Y_t|^p`).
    pub argmax: usize,
}

impl MomentCurveReport {
    pub fn max(&self) -> &MomentEstimate {
        &self.nodes[self.argmax]
    }
}

/// Per-node `E|Y_{t_j}|^p` over a set of paths.
pub fn moment_curve(trajs: &[Trajectory], p: f64) -> Result<MomentCurveReport> {
    let first = trajs.first().ok_or_else(|| Error::contract("no trajectories"))?;
    let mut curve = MomentCurve::new(*first.grid(), p)?;
    for t in trajs {
        curve.push(t)?;
    }
    curve.finish()
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit `ln y = intercept + slope · ln x`. Logs are taken of ratios to the
/// first point, so rescaling all `y` by a power of two leaves the slope
/// bit-identical.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::contract(format!("log-log fit needs >= 2 matched points, got {} and {}", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::contract("log-log fit needs positive finite values"));
    }
    let (x0, y0) = (xs[0], ys[0]);
    let lx: Vec<f64> = xs.iter().map(|x| libm::log(x / x0)).collect();
    let ly: Vec<f64> = ys.iter().map(|y| libm::log(y / y0)).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::contract("log-log fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let intercept = (libm::log(y0) + my) - slope * (libm::log(x0) + mx);
    Ok(LogLogFit { slope, intercept, r_squared, points: lx.len() })
}

/// Regression of error against ε; zero errors are flagged as exact and left out.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub fit: Option<LogLogFit>,
    pub exact: Vec<bool>,
}

/// Fit `ln error` against `ln ε` over `(ε, error)` pairs.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::contract(format!("rate fit needs >= 3 (eps, error) pairs, got {}", pairs.len())));
    }
    for (eps, err) in pairs {
        if !(*eps > 0.0 && eps.is_finite()) {
            return Err(Error::contract(format!("eps = {eps} must be positive")));
        }
        if !(*err >= 0.0 && err.is_finite()) {
            return Err(Error::contract(format!("error value {err} must be a non-negative real")));
        }
    }
    let exact: Vec<bool> = pairs.iter().map(|(_, e)| *e == 0.0).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().filter(|(_, e)| *e > 0.0).copied().unzip();
    let fit = if xs.len() >= 2 { Some(loglog_fit(&xs, &ys)?) } else { None };
    Ok(RateFit { fit, exact })
}

/// ε-ladder of `(E max_j |Z^ε − Z|^p)` estimates and the fitted rate of
/// their `p`-th roots.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub eps_ladder: Vec<f64>,
    pub p: f64,
    pub errors: Vec<MomentEstimate>,
    pub exact: Vec<bool>,
    pub fit: Option<LogLogFit>,
}

impl RateReport {
    pub fn new(p: f64, eps_ladder: Vec<f64>, errors: Vec<MomentEstimate>) -> Result<Self> {
        check_p(p)?;
        if eps_ladder.len() != errors.len() {
            return Err(Error::contract("eps ladder and error list differ in length"));
        }
        if eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::contract("eps ladder must be strictly decreasing"));
        }
        let pairs: Vec<(f64, f64)> = eps_ladder.iter().zip(&errors).map(|(e, m)| (*e, m.root)).collect();
        let RateFit { fit, exact } = fit_rate(&pairs)?;
        Ok(RateReport { eps_ladder, p, errors, exact, fit })
    }
}

/// Pooled lagged increments `E|Y_{t+ℓΔ} − Y_t|^p`, accumulated path by path.
#[derive(Debug, Clone)]
pub struct IncrementMoments {
    grid: TimeGrid,
    p: f64,
    lags: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl IncrementMoments {
    pub fn new(grid: TimeGrid, p: f64, lags: &[usize]) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::contract(format!("increment order p = {p} must be >= 2")));
        }
        let mut sorted = lags.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() < 2 {
            return Err(Error::contract("need at least two distinct lags"));
        }
        if sorted[0] == 0 || *sorted.last().unwrap() > grid.steps() {
            return Err(Error::contract(format!("lags must lie in 1..={}", grid.steps())));
        }
        let k = sorted.len();
        Ok(IncrementMoments { grid, p, lags: sorted, sums: vec![0.0; k], counts: vec![0; k] })
    }

    pub fn push(&mut self, traj: &Trajectory) -> Result<()> {
        if *traj.grid() != self.grid {
            return Err(Error::contract("trajectory grid differs from the increment grid"));
        }
        let d = traj.dim();
        let n = self.grid.steps();
        for (k, &lag) in self.lags.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..=n - lag {
                let (a, b) = (traj.at(j), traj.at(j + lag));
                let mut sq = 0.0;
                for c in 0..d {
                    sq += (b[c] - a[c]) * (b[c] - a[c]);
                }
                acc += libm::pow(sq, 0.5 * self.p);
            }
            self.sums[k] += acc;
            self.counts[k] += (n - lag + 1) as u64;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<HolderEstimate> {
        let dt = self.grid.dt();
        let lag_times: Vec<f64> = self.lags.iter().map(|l| *l as f64 * dt).collect();
        let means: Vec<f64> = self.sums.iter().zip(&self.counts).map(|(s, c)| s / *c as f64).collect();
        let fit = loglog_fit(&lag_times, &means)?;
        Ok(HolderEstimate { theta: fit.slope / self.p, r_squared: fit.r_squared, p: self.p, lag_times, moments: means })
    }
}

/// Empirical Hölder exponent `θ` from `E|Y_t − Y_t'|^p ≈ C |t − t'|^(θp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub theta: f64,
    pub r_squared: f64,
    pub p: f64,
    pub lag_times: Vec<f64>,
    pub moments: Vec<f64>,
}

pub fn holder_exponent(trajs: &[Trajectory], p: f64, lags: &[usize]) -> Result<HolderEstimate> {
    let first = trajs.first().ok_or_else(|| Error::contract("no trajectories"))?;
    let mut acc = IncrementMoments::new(*first.grid(), p, lags)?;
    for t in trajs {
        acc.push(t)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisName {
    /// Power integrability of the kernels.
    HK1,
    /// Time modulus of continuity of the kernels.
    HK2,
    /// Gradient, growth and σ-Lipschitz bounds.
    Hbs1,
    /// Lipschitz continuity of `∇b`.
    Hb2,
}

impl HypothesisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            HypothesisName::HK1 => "HK1",
            HypothesisName::HK2 => "HK2",
            HypothesisName::Hbs1 => "Hbs1",
            HypothesisName::Hb2 => "Hb2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub label: String,
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub name: HypothesisName,
    pub parameters: Vec<(String, f64)>,
    pub passed: bool,
    /// The violated constraint, when one was detected.
    pub violation: Option<String>,
    pub evidence: Vec<Evidence>,
}

impl HypothesisReport {
    pub fn parameter(&self, key: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn hk1_violation(k: &KernelSpec, q_factor: f64, beta: f64, which: &str) -> Option<String> {
    let singular = k.singular_on_diagonal() || k.singular_at_origin();
    if !singular {
        return None;
    }
    let margin = 1.0 - q_factor * k.alpha() * beta;
    if margin > 0.0 {
        return None;
    }
    let constraint = if q_factor == 2.0 { "1-2*alpha*beta <= 0" } else { "1-alpha*beta <= 0" };
    Some(format!("{constraint} for {which} = {} (alpha = {}, beta = {beta})", k.label(), k.alpha()))
}

/// `sup_t ∫_0^t [K1^β + K2^(2β)] ds` over the grid nodes, by quadrature.
pub fn check_hk1(k1: &KernelSpec, k2: &KernelSpec, beta: f64, grid: &TimeGrid, quad: &QuadratureConfig) -> Result<HypothesisReport> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::contract(format!("beta = {beta} must be > 1")));
    }
    let violation = hk1_violation(k1, 1.0, beta, "K1").or_else(|| hk1_violation(k2, 2.0, beta, "K2"));
    let mut parameters = vec![("beta".to_string(), beta)];
    if let Some(v) = violation {
        return Ok(HypothesisReport { name: HypothesisName::HK1, parameters, passed: false, violation: Some(v), evidence: Vec::new() });
    }
    let mut evidence = Vec::with_capacity(grid.steps());
    let mut sup = 0.0f64;
    let mut sup_at = 0.0;
    for j in 1..=grid.steps() {
        let t = grid.node(j);
        let v = kernel_pow_integral_quadrature(k1, t, beta, quad)? + kernel_pow_integral_quadrature(k2, t, 2.0 * beta, quad)?;
        if v > sup {
            sup = v;
            sup_at = t;
        }
        evidence.push(Evidence { label: "integral".to_string(), at: t, value: v });
    }
    let passed = evidence.iter().all(|e| e.value.is_finite());
    parameters.push(("sup".to_string(), sup));
    parameters.push(("sup_at".to_string(), sup_at));
    Ok(HypothesisReport { name: HypothesisName::HK1, parameters, passed, violation: None, evidence })
}

/// Dyadic gaps used by [`check_hk2`]: `T/2, T/4, …` down to the grid step.
fn hk2_gaps(grid: &TimeGrid) -> Vec<f64> {
    let mut gaps = Vec::new();
    let mut h = 0.5 * grid.horizon();
    while h >= grid.dt() * (1.0 - 1e-12) || gaps.len() < 3 {
        gaps.push(h);
        h *= 0.5;
    }
    gaps
}

/// Sample `∫_0^{t∧t'} [|ΔK1| + |ΔK2|²] ds` on dyadic gaps `|t − t'|` and fit
/// its log-log slope `γ`; the K1 and K2 parts are fitted separately as well.
pub fn check_hk2(k1: &KernelSpec, k2: &KernelSpec, grid: &TimeGrid, quad: &QuadratureConfig) -> Result<HypothesisReport> {
    let horizon = grid.horizon();
    let bases = [0.25 * horizon, 0.5 * horizon];
    let gaps = hk2_gaps(grid);
    let mut first = Vec::with_capacity(gaps.len());
    let mut second = Vec::with_capacity(gaps.len());
    let mut combined = Vec::with_capacity(gaps.len());
    let mut evidence = Vec::new();
    for &h in &gaps {
        let (mut m1, mut m2, mut mc) = (0.0f64, 0.0f64, 0.0f64);
        for &t in &bases {
            let t2 = (t + h).min(horizon);
            let a = kernel_time_modulus(k1, t, t2, 1.0, quad)?;
            let b = kernel_time_modulus(k2, t, t2, 2.0, quad)?;
            m1 = m1.max(a);
            m2 = m2.max(b);
            mc = mc.max(a + b);
        }
        evidence.push(Evidence { label: "k1_modulus".to_string(), at: h, value: m1 });
        evidence.push(Evidence { label: "k2_modulus".to_string(), at: h, value: m2 });
        evidence.push(Evidence { label: "modulus".to_string(), at: h, value: mc });
        first.push(m1);
        second.push(m2);
        combined.push(mc);
    }
    let mut parameters = Vec::new();
    let mut push_fit = |key: &str, values: &[f64]| -> Result<Option<LogLogFit>> {
        if values.iter().all(|v| *v == 0.0) {
            parameters.push((format!("{key}_exact"), 1.0));
            return Ok(None);
        }
        let fit = loglog_fit(&gaps, values)?;
        parameters.push((key.to_string(), fit.slope));
        parameters.push((format!("{key}_r2"), fit.r_squared));
        Ok(Some(fit))
    };
    let whole = push_fit("gamma", &combined)?;
    push_fit("gamma_k1", &first)?;
    push_fit("gamma_k2", &second)?;
    let passed = match whole {
        None => true,
        Some(f) => f.slope > 0.0 && f.r_squared >= 0.9,
    };
    Ok(HypothesisReport { name: HypothesisName::HK2, parameters, passed, violation: None, evidence })
}

/// Box `[lo, hi]^d` (and times in `[0, horizon]`) sampled by [`check_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
    pub horizon: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { lo: -5.0, hi: 5.0, horizon: 1.0 }
    }
}

/// Sample the declared constants of a model: returns the `Hbs1` and `Hb2` reports.
///
/// Half of the Lipschitz pairs are independent points of the box, half are
/// local pairs at log-uniform distances, so local maxima of the ratios are
/// approached.
pub fn check_model(mo: &ModelSpec, samples: usize, region: SampleBox, seed: u64) -> Result<[HypothesisReport; 2]> {
    if samples < 100 {
        return Err(Error::contract(format!("check_model needs >= 100 samples, got {samples}")));
    }
    if !(region.hi > region.lo) || !(region.horizon > 0.0) {
        return Err(Error::contract("sample box must be non-empty"));
    }
    let (d, m) = (mo.state_dim(), mo.noise_dim());
    let width = region.hi - region.lo;
    let mut rng = CounterRng::new(seed, 0x006d_6f64_656c);
    let (mut bx, mut sx, mut sy) = (vec![0.0; d], vec![0.0; d * m], vec![0.0; d * m]);
    let (mut jx, mut jy) = (vec![0.0; d * d], vec![0.0; d * d]);

    #[derive(Clone, Copy)]
    struct Max {
        value: f64,
        at: f64,
    }
    let bump = |slot: &mut Max, value: f64, at: f64| {
        if value > slot.value {
            *slot = Max { value, at };
        }
    };
    let zero = Max { value: 0.0, at: 0.0 };
    let (mut grad, mut growth_b, mut growth_s, mut lip_s, mut lip_g) = (zero, zero, zero, zero, zero);

    for k in 0..samples {
        let t = region.horizon * rng.uniform();
        let x: Vec<f64> = (0..d).map(|_| region.lo + width * rng.uniform()).collect();
        let y: Vec<f64> = if k % 2 == 0 {
            (0..d).map(|_| region.lo + width * rng.uniform()).collect()
        } else {
            let dist = width * libm::pow(10.0, -4.0 * rng.uniform());
            let dir: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let norm = frobenius(&dir).max(f64::MIN_POSITIVE);
            x.iter().zip(&dir).map(|(a, u)| a + dist * u / norm).collect()
        };
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dist = frobenius(&diff);
        let size = 1.0 + frobenius(&x);

        mo.drift(t, &x, &mut bx);
        mo.drift_jacobian(t, &x, &mut jx);
        mo.drift_jacobian(t, &y, &mut jy);
        mo.diffusion(t, &x, &mut sx);
        mo.diffusion(t, &y, &mut sy);

        bump(&mut grad, frobenius(&jx), x[0]);
        bump(&mut growth_b, frobenius(&bx) / size, x[0]);
        bump(&mut growth_s, frobenius(&sx) / size, x[0]);
        if dist > 0.0 {
            let ds: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
            let dj: Vec<f64> = jx.iter().zip(&jy).map(|(a, b)| a - b).collect();
            bump(&mut lip_s, frobenius(&ds) / dist, x[0]);
            bump(&mut lip_g, frobenius(&dj) / dist, 0.5 * (x[0] + y[0]));
        }
    }

    let slack = 1.0 + 1e-9;
    let (l1, l2) = (mo.l1(), mo.l2());
    let ev = |label: &str, v: Max| Evidence { label: label.to_string(), at: v.at, value: v.value };
    let first = [("grad_norm", grad), ("drift_growth", growth_b), ("sigma_growth", growth_s), ("sigma_lipschitz", lip_s)];
    let hbs1_passed = first.iter().all(|(_, v)| v.value <= l1 * slack);
    let hbs1 = HypothesisReport {
        name: HypothesisName::Hbs1,
        parameters: first.iter().map(|(k, v)| (k.to_string(), v.value)).chain([("L1".to_string(), l1)]).collect(),
        passed: hbs1_passed,
        violation: (!hbs1_passed).then(|| format!("a sampled ratio exceeds L1 = {l1}")),
        evidence: first.iter().map(|(k, v)| ev(k, *v)).collect(),
    };
    let hb2_passed = lip_g.value <= l2 * slack;
    let hb2 = HypothesisReport {
        name: HypothesisName::Hb2,
        parameters: vec![("grad_lipschitz".to_string(), lip_g.value), ("L2".to_string(), l2)],
        passed: hb2_passed,
        violation: (!hb2_passed).then(|| format!("grad_b Lipschitz ratio {} exceeds L2 = {l2}", lip_g.value)),
        evidence: vec![ev("grad_lipschitz", lip_g)],
    };
    Ok([hbs1, hb2])
}
