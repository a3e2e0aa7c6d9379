use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use volterra_clt::{run, validate, RunError, RunOptions};

/// Run a stochastic Volterra CLT experiment and write CSV results.
#[derive(Debug, Parser)]
#[command(name = "volterra-clt", version)]
struct Cli {
    /// Experiment config (TOML), or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "VOLTERRA_CLT_THREADS")]
    threads: Option<usize>,
    /// Exit with status 3 when a hypothesis check fails.
    #[arg(long)]
    strict: bool,
    /// Write per-path trajectories under `<out>/trajectories`.
    #[arg(long)]
    dump_trajectories: bool,
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| RunError::Io(format!("{}: {e}", cli.config.display())))?;
    let config = validate(&text)?;
    let out_dir = cli
        .out
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| RunError::Config("out_dir: not set in the config and no --out given".into()))?;
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let opts = RunOptions { out_dir, threads, seed: cli.seed, strict: cli.strict, dump_trajectories: cli.dump_trajectories };
    let summary = run(&config, &opts)?;
    println!("{} files written, manifest {}", summary.files.len(), summary.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("volterra-clt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
