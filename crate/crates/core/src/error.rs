use thiserror::Error;

/// Errors raised by problem construction, the linear algebra layer and the
/// analysis routines. Solver runs never return these for divergence; they
/// report a [`Status`](crate::methods::Status) instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain failure: {0}")]
    Domain(String),

    #[error("linear operator singular (rcond {rcond:e})")]
    Singular { rcond: f64 },

    #[error("derivative singular at x0 (rcond {rcond:e})")]
    SingularDerivative { rcond: f64 },

    #[error("already at root: F(x0) = 0")]
    AlreadyAtRoot,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("hypotheses not satisfied: a = {a} > 1/2")]
    HypothesesNotSatisfied { a: f64 },

    #[error("normalization check failed: {0}")]
    Normalization(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
