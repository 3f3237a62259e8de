use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Population reached the top of the truncated Fock ladder.
    #[error(
        "truncation guard: population {leakage:.3e} in the top Fock levels exceeds {limit:.1e}"
    )]
    Truncation { leakage: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed input file content.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
