use thiserror::Error;

/// Errors produced across the forecasting, evaluation and benchmarking layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid split: n_test={n_test} must be in 1..{len}")]
    InvalidSplit { n_test: usize, len: usize },

    #[error("gap in series: no observation at t={timestamp}")]
    Gap { timestamp: i64 },

    #[error("ambiguous regularization: t={first} and t={second} both snap to grid slot t={slot}")]
    Ambiguous { first: i64, second: i64, slot: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("arity mismatch: expected window of {expected} values, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("singular normal equations; use a ridge penalty lambda > 0")]
    Singular,

    #[error("degenerate target: actual values have zero variance")]
    DegenerateTarget,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
