use thiserror::Error;

/// Errors raised by distribution evaluation, estimation and I/O helpers.
#[derive(Debug, Error)]
pub enum GpsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GpsError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GpsError::Domain(msg.into()))
}
