//! Shared error type for the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
