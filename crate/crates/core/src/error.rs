use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Error, Debug)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("boundary system is rank deficient")]
    RankDeficient,

    #[error("KKT system is singular")]
    SingularKkt,

    #[error("covariance matrix is not positive semi-definite")]
    NotPsd,

    #[error("arc length {s} outside centerline range [0, {len}]")]
    OutOfRange { s: f64, len: f64 },

    #[error("ambiguous centerline projection: point equidistant to segments {a} and {b}")]
    AmbiguousProjection { a: usize, b: usize },

    #[error("error model does not cover step {0}")]
    ModelMismatch(usize),

    #[error("step {step} has {count} observations, need at least 2")]
    TooFewObservations { step: usize, count: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("all elite weights vanished")]
    DegenerateWeights,

    #[error("only {found} finite-cost candidates, need {needed}")]
    TooFewCandidates { found: usize, needed: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
