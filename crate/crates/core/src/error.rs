use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument or state violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// A computation produced NaN or infinity, usually from diverged parameters.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// Off-policy learner skipped an update because its buffer is underfull.
    #[error("not ready: {0}")]
    NotReady(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
