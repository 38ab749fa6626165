use thiserror::Error;

/// Errors raised by distribution construction, density evaluation and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bin edges or thresholds must be sorted ascending")]
    Unsorted,

    #[error("distribution does not expose a standalone X marginal")]
    MissingMarginal,

    #[error("Jacobian check failed for {map}: analytic {analytic}, numeric {numeric}")]
    JacobianMismatch {
        map: String,
        analytic: f64,
        numeric: f64,
    },

    #[error("invalid distribution spec: {0}")]
    Spec(String),

    #[error("unknown benchmark task: {0}")]
    UnknownTask(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
