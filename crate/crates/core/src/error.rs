use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed source in {path} at byte {offset}: {reason}")]
    MalformedSource {
        path: String,
        offset: usize,
        reason: &'static str,
    },

    #[error("revision order violated: expected revision {expected}, found {found}")]
    RevisionOrder { expected: u32, found: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("empty evaluation: no reports to score")]
    EmptyEvaluation,

    #[error("cannot plan folds: {0}")]
    Planning(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
