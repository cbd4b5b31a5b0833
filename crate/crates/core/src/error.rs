use thiserror::Error;

/// Errors raised when constructing or running a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("configuration mismatch: {0}")]
    Mismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("zero scheduling probability for user {0}")]
    ZeroProbability(usize),
    #[error("no samples: {0}")]
    NoSamples(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
