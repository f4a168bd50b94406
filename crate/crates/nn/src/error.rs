use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("token id {id} out of range for vocabulary of {size}")]
    Vocabulary { id: usize, size: usize },
    #[error("empty sequence: {0}")]
    EmptySequence(&'static str),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
