use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("duplicate id: {0}")]
    DuplicateDocId(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate document '{doc}' in ranked list for topic '{topic}'")]
    DuplicateInList { topic: String, doc: String },

    #[error("feature vector has {got} values, manifest declares {want}")]
    FeatureLengthMismatch { got: usize, want: usize },

    #[error("search budget of {budget} nodes exceeded; best bound so far {best_bound}")]
    SearchBudgetExceeded { budget: u64, best_bound: f64 },

    #[error("topic '{0}' missing from gold run")]
    MissingGoldTopic(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
