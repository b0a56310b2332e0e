use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in an input file does not match its declared format.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("seed phrase `{phrase}` is assigned to both `{first}` and `{second}`")]
    SeedConflict {
        phrase: String,
        first: String,
        second: String,
    },

    #[error("document `{id}`: {message}")]
    InvalidDocument { id: String, message: String },

    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),

    #[error("target `{0}` is not extracted by any pattern")]
    UnextractedTarget(String),

    #[error("target `{0}` never occurs in the corpus")]
    ZeroFrequency(String),

    #[error("syntactic pattern file references unknown document `{0}`")]
    UnknownDocument(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("document ids differ between predictions and gold: {0}")]
    IdMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no accepted label sets")]
    NoAcceptedLabelSets,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
