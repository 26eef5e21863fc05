use thiserror::Error;

/// Failure modes of the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precision exhausted at {bits} bits: last agreement {agreement:e}, target {target:e}")]
    PrecisionExhausted { bits: u32, agreement: f64, target: f64 },

    /// Raised inside a precision level when the result is visibly unreliable;
    /// the adaptive driver retries at the next level.
    #[error("insufficient working precision: {0}")]
    InsufficientPrecision(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("difference step underflows at {bits} bits")]
    StepUnderflow { bits: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cross-check mismatch for {quantity}: relative difference {rel_diff:e} exceeds {bound:e}")]
    CrossCheckMismatch { quantity: String, rel_diff: f64, bound: f64 },

    #[error("property violated: {item} (margin {margin:e})")]
    PropertyViolation { item: String, margin: f64 },

    #[error("interval holds {found} zeros, need at least {needed}")]
    InsufficientZeros { found: usize, needed: usize },

    #[error("tridiagonal eigenvalue iteration failed to converge at index {index}")]
    EigenNonConvergence { index: usize },

    #[error("root bracketing failed: {0}")]
    RootBracketFailure(String),

    #[error("expansion is singular at t = 0")]
    SingularAtZero,

    #[error("least-squares design matrix is ill conditioned (condition number {condition:e})")]
    IllConditionedFit { condition: f64 },

    #[error("remainder at {point} is within certified noise")]
    RemainderBelowNoise { point: f64 },

    #[error("division hazard at t = {t}: divisor below working precision")]
    DivisionHazard { t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
