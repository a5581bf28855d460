use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A hypothesis of the operation (certified bound, truncation size, ...) does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The request exceeds a hard size guard.
    #[error("size limit exceeded: {0}")]
    Size(String),
    /// A window whose `f` and `fhat` are not a Fourier pair.
    #[error("invalid window: {0}")]
    Window(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
