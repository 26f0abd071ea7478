use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A source could not be read or parsed at all (bad header, wrong schema).
    #[error("ingest error: {0}")]
    Ingest(String),

    /// Caller violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Integration or optimization produced a non-finite state.
    #[error("numerical error: {0}")]
    Numerical(String),
}
