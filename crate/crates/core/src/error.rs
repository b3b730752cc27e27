use thiserror::Error;

/// Errors produced by the geometry, coverage and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: the ambient dimension must be at least 2")]
    InvalidDimension(usize),

    #[error("invalid cap count {0}: at least one cap is required")]
    InvalidCapCount(usize),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("root solver failed: {0}")]
    Solver(String),

    #[error("operation requires dimension {expected}, got {actual}")]
    WrongDimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("rejection sampling gave up after {0} attempts")]
    RejectionExhausted(u64),

    #[error("worker pool: {0}")]
    ThreadPool(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
