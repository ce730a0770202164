use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("Rayleigh quotient undefined: field has zero mass")]
    ZeroMass,

    #[error("solver failure after {iterations} iterations (last lambda {last_lambda:e}): {reason}")]
    SolverFailure {
        reason: String,
        iterations: usize,
        last_lambda: f64,
        last_iterate: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
