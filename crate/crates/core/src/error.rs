use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LacunaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {n} exceeds the exact-solver limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("exponent pattern has length {pattern} but {indices} indices were given")]
    PatternMismatch { pattern: usize, indices: usize },

    #[error("operation not supported for system kind {0}")]
    UnsupportedKind(String),

    #[error("step representation would need {pieces} pieces (cap {cap})")]
    SizeExceeded { pieces: u128, cap: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("coefficient vector is identically zero")]
    ZeroVector,

    #[error("too many indices: {count} (limit {limit})")]
    TooManyIndices { count: usize, limit: usize },

    #[error("no subset found within budget; best condition sum {best_sum:e} at {best_indices:?}")]
    NotFound { best_sum: f64, best_indices: Vec<usize> },

    #[error("horizon exhausted: accepted {accepted} of {requested}")]
    HorizonExhausted { accepted: usize, requested: usize },

    #[error("Riesz weight too large: |b_{index}|*D = {value} > 1")]
    WeightTooLarge { index: usize, value: f64 },

    #[error("function {index} exceeds the bound D")]
    BoundViolated { index: usize },

    #[error("extension condition failed: max |E| = {max_abs} is not below {threshold}")]
    ConditionFailed { max_abs: f64, threshold: f64 },

    #[error("irrational data: {0}")]
    IrrationalData(String),

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("equivalence constant not bracketed below {0}")]
    Unbounded(f64),
}

pub type Result<T> = std::result::Result<T, LacunaError>;
