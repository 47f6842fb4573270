use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// An eigenphase of a propagator sits too close to the logarithm's branch cut.
    #[error("eigenphase {phase} is within {margin:e} of the branch cut at +/-pi")]
    BranchCut { phase: f64, margin: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("spectrum is not integrable: {0}")]
    NonIntegrable(String),

    #[error("time grid does not cover the sequence: {0}")]
    Coverage(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
