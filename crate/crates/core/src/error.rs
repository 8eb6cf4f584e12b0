use thiserror::Error;

use crate::kernels::Violation;

/// Failures raised by the numerical pipeline.
///
/// Usage errors (bad parameters) and numerical failures are kept apart so the
/// CLI can map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel `{name}` is not admissible: {}", join_violations(.violations))]
    InadmissibleKernel { name: String, violations: Vec<Violation> },

    #[error("integrand is not finite at x = {abscissa}")]
    NonFinite { abscissa: f64 },

    #[error("grid step mismatch: {left} vs {right}")]
    StepMismatch { left: f64, right: f64 },

    #[error("no bound in range: {0}")]
    NoBound(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by the caller's parameters rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::InadmissibleKernel { .. })
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
