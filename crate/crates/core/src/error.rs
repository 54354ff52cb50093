use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read input {path}: {source}")]
    Ingest {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("store already weighted ({0}); refusing to apply a second transform")]
    AlreadyWeighted(String),

    #[error("operation requires a raw count store")]
    NotRaw,

    #[error("operation requires a weighted store")]
    NotWeighted,

    #[error("invalid shift k = {0}; k must be >= 1")]
    InvalidShift(f64),

    #[error("store format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported store format version {0}")]
    Version(String),

    #[error("truncated store file: {0}")]
    Truncated(String),

    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("operation requires a typed store, got an untyped one")]
    Untyped,

    #[error("unknown relation {relation:?} for phrase type {phrase_type}")]
    UnknownRelation {
        phrase_type: String,
        relation: String,
    },

    #[error("malformed feature {0:?}")]
    MalformedFeature(String),

    #[error("dataset {path} line {line}: {message}")]
    Dataset {
        path: String,
        line: usize,
        message: String,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("no items could be scored for {0}")]
    NothingScored(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
