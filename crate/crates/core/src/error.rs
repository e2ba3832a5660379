use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: bad field `{field}`: {message}")]
    Format {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: dangling reference: {message}")]
    Reference { line: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("vocabulary hash mismatch: checkpoint has {expected}, loaded vocabulary has {found}")]
    HashMismatch { expected: String, found: String },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("sentence {sentence}: tree parse error: {message}")]
    TreeParse { sentence: usize, message: String },

    #[error("unmapped nominal predicate `{0}`")]
    UnmappedPredicate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for arithmetic failures (non-finite values, failed checks).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}
