use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An arm index is out of range.
    #[error("arm index {index} out of range for {k} arms")]
    IndexOutOfRange { index: usize, k: usize },

    /// The operation is not defined for this reward family or configuration.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Arguments violate a required ordering.
    #[error("ordering violated: {0}")]
    Ordering(String),

    /// A precondition on the instance does not hold (e.g. the best arm is not unique).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A value lies outside the range of the function being inverted.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A numerical routine failed to bracket or converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An experiment configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
