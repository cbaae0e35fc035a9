use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("argument {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("gave up after {0} tries")]
    RetriesExhausted(usize),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("gcd({f}, {q}) != 1")]
    NotCoprime { f: u64, q: u64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
