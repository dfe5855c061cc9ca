use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} outside {expected}")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("tree exceeds node cap of {limit}")]
    Capacity { limit: usize },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("tree is empty; {0} is undefined")]
    EmptyTree(&'static str),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation failure: {0}")]
    Truncation(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("conditioning failed: {0}")]
    Conditioning(String),

    #[error("internal consistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
