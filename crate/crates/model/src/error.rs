use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] revloc_nn::Error),
    #[error(transparent)]
    Core(#[from] revloc_core::Error),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unresolved reference: {0}")]
    Unresolved(String),
    #[error("model checkpoint: {0}")]
    Checkpoint(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
