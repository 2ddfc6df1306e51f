use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument falls outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite parameters, activations or loss were produced during training.
    #[error("stall at epoch {epoch}: {reason}")]
    Stall { epoch: usize, reason: String },

    #[error("damped normal matrix is singular after {retries} damping increases")]
    Singular { retries: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("label {value} at line {line} is outside {{1, 2}}")]
    LabelDomain { line: usize, value: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
