use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid observable: {0}")]
    Observable(String),
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
