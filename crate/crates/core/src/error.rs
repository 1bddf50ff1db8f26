use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("embedding file, line {line}: {message}")]
    EmbeddingFormat { line: usize, message: String },

    #[error("similarity undefined for a zero-length vector")]
    UndefinedSimilarity,

    #[error("vectors differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),

    #[error("KB dump, record {record}: {message}")]
    KbRecord { record: usize, message: String },

    #[error("KB invariant violated: {0}")]
    KbInvariant(String),

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error("parsed corpus, line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("{path}, line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown facet key `{0}`")]
    UnknownFacetKey(String),

    #[error("scorer protocol violation: {message} (offending line: {line:?})")]
    Protocol { line: String, message: String },

    #[error("scorer did not answer within {0:?}")]
    ScorerTimeout(std::time::Duration),

    #[error("scorer process: {0}")]
    Scorer(String),

    #[error("fetcher: {0}")]
    Fetch(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn protocol(line: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Protocol {
            line: line.into(),
            message: message.into(),
        }
    }
}
