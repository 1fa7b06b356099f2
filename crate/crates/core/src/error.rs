use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed model document: {0}")]
    ModelFormat(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value out of bounds in record {id}: {message}")]
    Bounds { id: u64, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("simplex iteration cap of {0} exceeded")]
    IterationLimit(usize),

    #[error("seed {id} is misclassified: label {label}, predicted {predicted}")]
    MisclassifiedSeed { id: u64, label: usize, predicted: usize },

    #[error("seed sets differ: {0}")]
    SeedMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
