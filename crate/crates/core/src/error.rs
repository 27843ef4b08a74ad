use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("value space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("illegal perturbation: {0}")]
    IllegalPerturbation(String),

    #[error("splice failed: {0}")]
    SpliceFailed(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
