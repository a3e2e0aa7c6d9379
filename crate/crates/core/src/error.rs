use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A kernel was evaluated where it blows up.
    #[error("kernel {label} is singular at (t, s) = ({t}, {s})")]
    SingularPoint { label: String, t: f64, s: f64 },

    #[error("{op}: series did not converge after {terms} terms")]
    Convergence { op: &'static str, terms: usize },

    #[error("quadrature did not reach tolerance {tol:e} (last change {change:e})")]
    Quadrature { tol: f64, change: f64 },

    /// Caller violated a documented precondition (shape, length, ordering).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The state left the finite range while stepping.
    #[error("trajectory {label} diverged at node {index} (t = {t})")]
    Divergence { label: &'static str, index: usize, t: f64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }

    pub(crate) fn contract(detail: impl Into<String>) -> Self {
        Error::Contract(detail.into())
    }

    pub(crate) fn config(detail: impl Into<String>) -> Self {
        Error::Config(detail.into())
    }
}
