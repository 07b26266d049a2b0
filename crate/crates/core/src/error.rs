use thiserror::Error;

/// Errors raised by the statistics, bootstrap, model and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("shape mismatch: expected {expected} values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("non-finite value at observation {index}")]
    NonFinite { index: usize },

    #[error("degenerate bandwidth: median pairwise distance {median:e} is below 1e-12")]
    DegenerateBandwidth { median: f64 },

    #[error("kernel requires a resolved bandwidth")]
    MissingBandwidth,

    #[error("invalid bandwidth {0}: must be finite and positive")]
    InvalidBandwidth(f64),

    #[error("series too short: need at least {needed} observations, got {found}")]
    TooShort { needed: usize, found: usize },

    #[error("oracle limited to 40 lagged pairs, got {0}")]
    OracleTooLarge(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-positive conditional variance at t = {0}")]
    NonPositiveVariance(usize),

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("residuals have zero variance")]
    DegenerateResiduals,

    #[error("bootstrap aborted: {failed} of {total} replicates failed after retry (first: {first})")]
    BootstrapAborted {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("numerical blow-up at step {step}: state magnitude {value:e} exceeds {limit:e}")]
    NumericalBlowup { step: usize, value: f64, limit: f64 },

    #[error("experiment aborted: {failed} of {total} replications failed (first: {first})")]
    ExperimentAborted {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
