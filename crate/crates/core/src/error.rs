use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed XML. `offset` is a byte offset into the input.
    #[error("XML parse error at byte {offset}: {message}")]
    Xml { offset: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid path pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(
        "alignment segment too long ({gt_len} x {ocr_len} chars, limit {limit}); \
         raise max_segment_len or split the input"
    )]
    SegmentTooLong {
        gt_len: usize,
        ocr_len: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("page ids do not match between streams; unmatched: {0:?}")]
    PageMismatch(Vec<String>),

    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
