use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrakError {
    #[error("ratio list is empty")]
    EmptyRatios,
    #[error("ratio {0} is outside (0, 1)")]
    OutOfRange(f64),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("{points} points exceed the point budget of {cap}")]
    BudgetExceeded { points: u128, cap: usize },
    #[error("dimension s = {s} violates n-1 < s <= n for n = {n}")]
    DimensionOutOfRange { s: f64, n: usize },
    #[error("scale {scale} is below the admissible minimum {minimum}")]
    ScaleTooFine { scale: f64, minimum: f64 },
    #[error("cube holds {found} points, at least {needed} required")]
    TooFewPoints { found: usize, needed: usize },
    #[error("Gram matrix has numerical rank {rank} < {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("cube does not meet the cloud")]
    EmptyCube,
    #[error("alpha must be positive, got {0}")]
    NonpositiveAlpha(f64),
    #[error("scale grid is empty")]
    EmptyGrid,
    #[error("every scale was skipped at point {0}")]
    AllScalesSkipped(usize),
    #[error("function has {found} values, cloud has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at point {0}")]
    NonFiniteValue(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, FrakError>;
