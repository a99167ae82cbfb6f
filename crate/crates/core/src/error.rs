use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multi-index set is empty")]
    EmptyIndexSet,
    #[error("multi-index set is not downward-closed")]
    NotDownwardClosed,
    #[error("multi-index {0:?} is not a frontier element of the set")]
    NotInFrontier(Vec<u32>),
    #[error("exponent {exponent} exceeds the generating-node limit {max}")]
    ExponentTooLarge { exponent: u32, max: u32 },
    #[error("sobol sequence supports dimensions 1..={max}, got {got}")]
    UnsupportedDimension { got: usize, max: usize },
    #[error("least-squares system is rank deficient")]
    RankDeficient,
    #[error("no samples to fit")]
    NoSamples,
    #[error("frontier exhausted: every candidate exceeds the generating-node limit")]
    FrontierExhausted,
    #[error("objective returned non-finite value {value} at {point:?}")]
    NonFiniteValue { point: Vec<f64>, value: f64 },
    #[error("traces have mismatched lengths ({expected} vs {got})")]
    LengthMismatch { expected: usize, got: usize },
    #[error("nothing to aggregate or plot")]
    EmptyResult,
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed trace file {path}: {reason}")]
    MalformedTrace { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failure
    /// during the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::UnknownObjective(_)
                | Error::UnknownAlgorithm(_)
                | Error::UnsupportedDimension { .. }
                | Error::ZeroDimension
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
