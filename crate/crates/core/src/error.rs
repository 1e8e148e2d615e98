use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("half-window {half_window} too large for series of length {len}: only {blocks} block(s) fit, need at least {needed}")]
    WindowTooLarge {
        half_window: usize,
        len: usize,
        blocks: usize,
        needed: usize,
    },

    #[error("not positive definite: {0}")]
    NotPositive(String),

    #[error("graph is not acyclic: {0}")]
    Cyclic(String),

    #[error("model is not stationary: companion spectral radius {0:.6} >= 1")]
    NonStationary(f64),

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("replicate {rep}: {source}")]
    Replicate {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
