use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates the operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),
    /// The argument lies outside the mathematical domain of the map or solver.
    #[error("outside domain: {0}")]
    Domain(String),
    /// An intermediate value is not representable in double precision.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Reading or writing an artifact failed.
    #[error("i/o: {0}")]
    Io(String),
    /// A self-check failed. Indicates a bug, not bad input.
    #[error("internal check failed: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
