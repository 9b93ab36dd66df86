use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument violates a stated precondition.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An input is too large for an exact routine.
    #[error("size error: {what} = {got} exceeds limit {limit}")]
    Size { what: String, got: usize, limit: usize },
    /// A constructed object failed its own post-condition check.
    #[error("validation error: {0}")]
    Validation(String),
    /// A plan or search could not be completed.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Malformed serialized input.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
