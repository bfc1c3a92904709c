use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid loss value {value} at row {row}")]
    InvalidEntry { row: usize, value: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid coreset: {0}")]
    InvalidCoreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("loss rejected: {0}")]
    LossRejected(String),

    #[error("not on the probability simplex: {0}")]
    NotOnSimplex(String),

    #[error("{task} query cannot be used for {what}")]
    WrongTask { task: String, what: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
