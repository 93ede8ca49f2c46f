//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A target or argument is outside the representable/achievable domain.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A numerical routine failed to converge or produced an unusable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested analysis needs a stable configuration and this one is not.
    #[error("unstable configuration: {0}")]
    Unstable(String),

    /// Two internal constructions that must agree do not.
    #[error("internal consistency: {0}")]
    Inconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
