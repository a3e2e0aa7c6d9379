use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], env_threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_volterra-clt"));
    cmd.args(args).env_remove("VOLTERRA_CLT_THREADS");
    if let Some(t) = env_threads {
        cmd.env("VOLTERRA_CLT_THREADS", t);
    }
    cmd.output().unwrap()
}

fn run_with(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    let out = dir.join("out");
    let mut args = vec!["--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args, None)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

const SMALL_RATE: &str = r#"
experiment = "clt-rate"
steps = 32
paths = 20
eps_ladder = [0.25, 0.125, 0.0625]
x0_set = [[0.5]]
[model]
name = "sin-drift"
params = [1.0]
[kernel_k1]
kind = "rl"
H = 0.3
[kernel_k2]
kind = "fbm"
H = 0.7
"#;

#[test]
fn kernel_check_writes_passing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
experiment = "kernel-check"
steps = 64
beta = 1.5
[kernel_k1]
kind = "rl"
H = 0.75
[kernel_k2]
kind = "rl"
H = 0.75
"#;
    let o = run_with(dir.path(), cfg, &["--strict"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "hypcheck.csv");
    assert!(csv.starts_with("name,parameter,value,passed\n"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.iter().any(|r| r.starts_with("HK1,sup,")));
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{csv}");
}

#[test]
fn zero_model_rates_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_RATE.replace("name = \"sin-drift\"\nparams = [1.0]", "name = \"zero\"");
    let o = run_with(dir.path(), &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rate = read(dir.path(), "rate.csv");
    assert_eq!(rate.lines().next().unwrap(), "eps,p,lp_error,lp_error_pth_root,std_error,paths,steps,status");
    assert!(rate.lines().skip(1).all(|r| r.ends_with(",exact")), "{rate}");
    assert!(read(dir.path(), "rate_fit.csv").lines().nth(1).unwrap().ends_with(",exact"));
}

#[test]
fn increasing_ladder_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_RATE.replace("[0.25, 0.125, 0.0625]", "[0.0625, 0.125, 0.25]");
    let o = run_with(dir.path(), &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("eps_ladder"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn every_config_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_RATE.replace("H = 0.3", "H = 1.5").replace("steps = 32", "steps = 30");
    let o = run_with(dir.path(), &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kernel_k1.H") && err.contains("steps"), "{err}");
}

#[test]
fn strict_mode_fails_on_violated_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
experiment = "kernel-check"
steps = 16
beta = 2.5
[kernel_k1]
kind = "rl"
H = 0.25
[kernel_k2]
kind = "rl"
H = 0.25
"#;
    let o = run_with(dir.path(), cfg, &[]);
    assert!(o.status.success());
    assert!(read(dir.path(), "hypcheck.csv").contains("1-2*alpha*beta <= 0"));
    let o = run_with(dir.path(), cfg, &["--strict"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn divergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
experiment = "moments"
steps = 64
paths = 4
x0_set = [[1.0]]
[model]
name = "linear-additive"
params = [100.0, 1.0]
"#;
    let o = run_with(dir.path(), cfg, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), SMALL_RATE, &["--seed", "77", "--threads", "3"]);
    assert!(o.status.success());
    let manifest_path = dir.path().join("out").join("manifest.toml");
    let manifest: toml::Table = toml::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"].as_integer(), Some(77));
    assert!(manifest["finished_unix_ms"].as_integer() >= manifest["started_unix_ms"].as_integer());
    let sums = manifest["checksums"].as_table().unwrap();
    assert!(sums.contains_key("rate.csv") && sums.contains_key("moments.csv"));

    let again = dir.path().join("again");
    let o = bin(&["--config", manifest_path.to_str().unwrap(), "--out", again.to_str().unwrap()], Some("2"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second: toml::Table = toml::from_str(&fs::read_to_string(again.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(second["checksums"], manifest["checksums"]);
}

#[test]
fn outputs_stay_inside_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), SMALL_RATE, &["--dump-trajectories"]);
    assert!(o.status.success());
    let mut top: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    top.sort();
    assert_eq!(top, vec!["config.toml", "out"]);
    let traj = read(dir.path(), "trajectories/Z_eps_eps0.25_x0_path0.csv");
    assert!(traj.starts_with("t,v_1\n0,0\n"));
    assert_eq!(traj.lines().count(), 34);
    assert!(dir.path().join("out/trajectories/X0_x0.csv").exists());
    assert!(!dir.path().join("out/.manifest.toml.tmp").exists());
}

#[test]
fn other_experiments_write_their_tables() {
    let cases: [(&str, &[&str]); 4] = [
        (
            "experiment = \"model-check\"\nsamples = 200\n[model]\nname = \"tanh-mixed\"\nparams = [1.0]\n",
            &["hypcheck.csv", "hypcheck_evidence.csv"],
        ),
        ("experiment = \"fbm-cov\"\n[kernel_k2]\nkind = \"fbm\"\nH = 0.3\n", &["fbm_cov.csv", "fbm_cov_summary.csv"]),
        (
            "experiment = \"holder\"\nsteps = 256\npaths = 8\nx0_set = [[0.0]]\n[model]\nname = \"linear-additive\"\nparams = [0.0, 1.0]\n",
            &["holder.csv", "holder_fit.csv"],
        ),
        ("experiment = \"moments\"\nsteps = 16\npaths = 4\n[model]\nname = \"sin-drift\"\nparams = [2.0]\n", &["moments.csv"]),
    ];
    for (cfg, files) in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = run_with(dir.path(), cfg, &["--strict"]);
        assert!(o.status.success(), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(read(dir.path(), f).lines().count() >= 2, "{f}");
        }
    }
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), SMALL_RATE, &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threads"));
}
