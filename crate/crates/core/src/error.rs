use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("potential evaluated to {value} at node {node} (argument {argument})")]
    Evaluation {
        node: usize,
        argument: f64,
        value: f64,
    },

    #[error("potential `{potential}` violates its {certificate} certificate at s = {argument} (value {value})")]
    CertificateViolation {
        potential: String,
        certificate: &'static str,
        argument: f64,
        value: f64,
    },

    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
