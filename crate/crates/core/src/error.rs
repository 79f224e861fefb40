use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("structure error: {0}")]
    Structure(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("outside oracle scope: {0}")]
    OracleScope(String),
    #[error("Novikov precision exhausted: {0}")]
    Precision(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("undefined estimate: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach a line number to a parse error that was raised without one.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { line: 0, col, msg } => Error::Parse { line, col: col.max(1), msg },
            other => other,
        }
    }
}
