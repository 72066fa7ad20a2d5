use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs that do not fit the tree they are used with (layout mismatch,
    /// missing information sets, broken perfect recall).
    #[error("structural error: {0}")]
    Structural(String),
    /// A parameter outside its documented range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Non-finite intermediate values or a solver that failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A builder would exceed its node budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Malformed text input.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
