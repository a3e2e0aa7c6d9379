//! Experiment runner for central limit theorems of stochastic Volterra
//! equations: config parsing, parallel Monte Carlo orchestration, CSV output
//! and reproducibility manifests on top of `volterra-clt-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{validate, ExperimentConfig, FieldError};
pub use experiments::{run, RunOptions, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) | RunError::Numerical(_) => 1,
            RunError::Divergence(_) => 2,
            RunError::Hypothesis(_) => 3,
        }
    }
}

impl From<Vec<FieldError>> for RunError {
    fn from(errs: Vec<FieldError>) -> Self {
        RunError::Config(errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    }
}
