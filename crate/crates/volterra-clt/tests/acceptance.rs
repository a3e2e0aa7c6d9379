//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p volterra-clt --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use volterra_clt::config::{validate, ExperimentConfig};
use volterra_clt::{run, RunOptions, RunSummary};
use volterra_clt_core::analysis::{check_hk1, check_hk2};
use volterra_clt_core::kernels::{covariance_shape, kernel_covariance};
use volterra_clt_core::models::builtin_model;
use volterra_clt_core::paths::make_path;
use volterra_clt_core::solver::normalized_error;
use volterra_clt_core::special::gamma_fn;
use volterra_clt_core::{KernelSpec, QuadratureConfig, Scheme, SchemeConfig, TimeGrid};

struct Outcome {
    passed: bool,
    detail: String,
}

fn threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run_config(text: &str, out: &Path) -> RunSummary {
    let cfg: ExperimentConfig = validate(text).unwrap_or_else(|e| panic!("config: {e:?}"));
    let opts = RunOptions { out_dir: out.to_path_buf(), threads: threads(), seed: None, strict: false, dump_trajectories: false };
    run(&cfg, &opts).unwrap_or_else(|e| panic!("run: {e}"))
}

fn clt_config(model: &str) -> String {
    format!(
        r#"
experiment = "clt-rate"
T = 1.0
steps = 512
paths = 2000
eps_ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625]
p_values = [2.0, 4.0]
x0_set = [[1.0]]
master_seed = 2718
[model]
name = "{model}"
params = [1.0]
[kernel_k1]
kind = "rl"
H = 0.7
[kernel_k2]
kind = "rl"
H = 0.7
"#
    )
}

fn linear_exactness() -> Outcome {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let model = builtin_model("linear-additive", 1, 1, &[-1.0, 1.0]).unwrap();
    let cfg = SchemeConfig::default();
    let kernels = [
        KernelSpec::constant(1.0).unwrap(),
        KernelSpec::riemann_liouville(0.3).unwrap(),
        KernelSpec::riemann_liouville(0.7).unwrap(),
        KernelSpec::fbm(0.7).unwrap(),
    ];
    let mut worst = 0.0f64;
    for k in &kernels {
        let scheme = Scheme::new(k, k, grid, &cfg).unwrap();
        let skeleton = scheme.solve_deterministic(&model, &[1.0]).unwrap();
        for idx in 0..50 {
            let path = make_path(31, idx, grid, 1).unwrap();
            let z = scheme.solve_limit(&model, &skeleton, &path).unwrap();
            let scale = z.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for eps in [1e-1, 1e-2, 1e-4] {
                let x = scheme.solve_perturbed(&model, &[1.0], eps, &path).unwrap();
                let ze = normalized_error(&x, &skeleton, eps).unwrap();
                let gap = ze.values().iter().zip(z.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(gap / scale);
            }
        }
    }
    Outcome { passed: worst <= 1e-8, detail: format!("max relative gap {worst:.3e} (limit 1e-8)") }
}

fn clt_rate(model: &str, out: &Path) -> (Outcome, RunSummary) {
    let summary = run_config(&clt_config(model), out);
    let report = summary.rates.iter().find(|r| r.p == 2.0).unwrap();
    let fit = report.fit.expect("rate fit");
    let passed = (0.40..=0.65).contains(&fit.slope) && fit.r_squared >= 0.95;
    (Outcome { passed, detail: format!("{model}: slope {:.4} in [0.40, 0.65], r^2 {:.4} (>= 0.95)", fit.slope, fit.r_squared) }, summary)
}

fn moment_stability(model: &str, summary: &RunSummary) -> Outcome {
    let maxima: Vec<(f64, f64, f64)> = summary
        .moments
        .iter()
        .filter(|m| m.label == "Z_eps" && m.report.max().p == 4.0)
        .map(|m| (m.eps.unwrap(), m.report.max().value, m.report.max().std_error))
        .collect();
    let lo = maxima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
    let worst_se = maxima.iter().map(|m| m.2 / m.1).fold(0.0, f64::max);
    let passed = maxima.len() == 7 && hi / lo < 2.0 && worst_se < 0.2;
    Outcome {
        passed,
        detail: format!("{model}: max/min of sup_t E|Z^eps|^4 = {:.3} (< 2), worst std_error {:.1}% (< 20%)", hi / lo, 100.0 * worst_se),
    }
}

fn kernel_hypotheses() -> Outcome {
    let quad = QuadratureConfig::default();
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let mut notes = Vec::new();
    let mut passed = true;
    let mut worst_hk1 = 0.0f64;
    for h in [0.25, 0.75] {
        let k = KernelSpec::riemann_liouville(h).unwrap();
        let g = gamma_fn(h + 0.5).unwrap();
        for beta in [1.2, 1.5] {
            let r = check_hk1(&k, &k, beta, &grid, &quad).unwrap();
            let e1 = 1.0 + beta * (h - 0.5);
            let e2 = 1.0 + 2.0 * beta * (h - 0.5);
            let want = 1.0 / (e1 * g.powf(beta)) + 1.0 / (e2 * g.powf(2.0 * beta));
            let err = (r.parameter("sup").unwrap() - want).abs();
            worst_hk1 = worst_hk1.max(err);
            passed &= r.passed && err <= 1e-6;
        }
    }
    notes.push(format!("HK1 worst |error| {worst_hk1:.2e} (<= 1e-6)"));
    for h in [0.3, 0.75] {
        let k = KernelSpec::riemann_liouville(h).unwrap();
        let r = check_hk2(&k, &k, &grid, &quad).unwrap();
        let two_alpha = 2.0 * (h - 0.5f64).abs();
        let gamma = r.parameter("gamma").unwrap();
        let r2 = r.parameter("gamma_r2").unwrap();
        let ok = (gamma - two_alpha).abs() <= 0.1 && r2 >= 0.9;
        passed &= ok;
        notes.push(format!(
            "HK2 H={h}: gamma {gamma:.3} vs 2*alpha {two_alpha:.2} +/- 0.1, r^2 {r2:.3} (K2 part {:.3}){}",
            r.parameter("gamma_k2").unwrap(),
            if ok { "" } else { " MISS" }
        ));
    }
    Outcome { passed, detail: notes.join("; ") }
}

fn fbm_machinery(out: &Path) -> Outcome {
    let quad = QuadratureConfig::default();
    let times = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut notes = Vec::new();
    let mut passed = true;
    for h in [0.3, 0.7] {
        let k = KernelSpec::fbm(h).unwrap();
        let ratios: Vec<f64> = times
            .iter()
            .flat_map(|s| times.iter().map(move |t| (*s, *t)))
            .map(|(s, t)| kernel_covariance(&k, s, t, &quad).unwrap() / covariance_shape(h, s, t))
            .collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        passed &= spread <= 0.02;
        notes.push(format!("H={h}: covariance ratio spread {:.3}% (<= 2%)", 100.0 * spread));
    }
    for h in [0.3, 0.7] {
        let text = format!(
            r#"
experiment = "holder"
steps = 1024
paths = 2000
p_values = [2.0]
x0_set = [[0.0]]
master_seed = 99
holder_process = "Z"
[model]
name = "linear-additive"
params = [0.0, 1.0]
[kernel_k1]
kind = "constant"
[kernel_k2]
kind = "fbm"
H = {h}
"#
        );
        let summary = run_config(&text, &out.join(format!("holder_{h}")));
        let theta = summary.holder[0].theta;
        passed &= (theta - h).abs() <= 0.07;
        notes.push(format!("H={h}: theta {theta:.3} (+/- 0.07)"));
    }
    Outcome { passed, detail: notes.join("; ") }
}

fn spatial_lipschitz(out: &Path) -> Outcome {
    let text = r#"
experiment = "clt-rate"
steps = 512
paths = 2000
eps_ladder = [0.25, 0.0625, 0.015625]
p_values = [2.0]
x0_set = [[0.0], [0.5], [1.0]]
spatial = true
master_seed = 1618
[model]
name = "sin-drift"
params = [1.0]
[kernel_k1]
kind = "rl"
H = 0.7
[kernel_k2]
kind = "rl"
H = 0.7
"#;
    let summary = run_config(text, out);
    let at = |eps: f64, i: usize, k: usize| summary.spatial.iter().find(|s| s.eps == eps && s.x_i == i && s.x_k == k).unwrap().ratio;
    let mut passed = true;
    let mut bound = 0.0f64;
    let mut notes = Vec::new();
    for (i, k) in [(0, 1), (1, 2), (0, 2)] {
        let (a, b) = (at(0.25, i, k), at(0.015625, i, k));
        bound = bound.max(a).max(b);
        let factor = (a / b).max(b / a);
        passed &= a.is_finite() && b.is_finite() && factor <= 2.0;
        notes.push(format!("pair ({i},{k}) ratio {a:.4} -> {b:.4} (factor {factor:.3} <= 2)"));
    }
    notes.push(format!("common bound {bound:.4}"));
    Outcome { passed, detail: notes.join("; ") }
}

fn determinism(out: &Path) -> Outcome {
    let config = out.join("c2.toml");
    std::fs::write(&config, clt_config("sin-drift")).unwrap();
    let mut digests = Vec::new();
    for t in ["1", "8"] {
        let dir = out.join(format!("threads{t}"));
        let status = Command::new(env!("CARGO_BIN_EXE_volterra-clt"))
            .args(["--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", t])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        digests.push(std::fs::read(dir.join("rate.csv")).unwrap());
    }
    Outcome {
        passed: digests[0] == digests[1],
        detail: format!("rate.csv with --threads 1 and 8: {} bytes, identical = {}", digests[0].len(), digests[0] == digests[1]),
    }
}

fn report(id: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let passed = out.passed && in_time;
    let budget_text = budget.map(|b| format!(", budget {}s", b.as_secs())).unwrap_or_default();
    println!(
        "criterion {id} {name}: {} ({}; {:.1}s{budget_text})",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    passed
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let mut all = true;

    all &= report(1, "linear-exactness", Some(Duration::from_secs(30)), linear_exactness);

    let mut summaries = Vec::new();
    for model in ["sin-drift", "tanh-mixed"] {
        all &= report(2, "clt-rate", Some(Duration::from_secs(300)), || {
            let (o, s) = clt_rate(model, &root.join(model));
            summaries.push((model, s));
            o
        });
    }
    for (model, s) in &summaries {
        all &= report(3, "moment-stability", None, || moment_stability(model, s));
    }
    all &= report(4, "kernel-hypotheses", Some(Duration::from_secs(10)), kernel_hypotheses);
    all &= report(5, "fbm-machinery", Some(Duration::from_secs(180)), || fbm_machinery(&root.join("fbm")));
    all &= report(6, "spatial-lipschitz", None, || spatial_lipschitz(&root.join("spatial")));
    all &= report(7, "determinism", None, || determinism(root));

    if !all {
        println!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
