use thiserror::Error;

/// Errors produced by the pipeline, model, and explanation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("missing values present: {0}")]
    MissingValues(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("need at least one positive and one negative label")]
    SingleClass,

    #[error("convexity invariant violated: {0}")]
    ConvexityViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
