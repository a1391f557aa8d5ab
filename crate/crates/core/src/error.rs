use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no piece covers the input at character position {position}")]
    Coverage { position: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("malformed tree: {0}")]
    Structure(String),

    #[error("items without a title: {}", .0.join(", "))]
    MissingTitle(Vec<String>),

    #[error("items {first:?} and {second:?} share the same ID")]
    DuplicateId { first: String, second: String },

    #[error("item sets differ between constituent assignments")]
    ItemSetMismatch,

    #[error("item {0:?} is not indexed")]
    UnknownItem(String),

    #[error("need at least {needed} co-occurring pairs, found {found}")]
    InsufficientPairs { needed: usize, found: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
