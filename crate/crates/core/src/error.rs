use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog error: unknown pattern `{0}`")]
    UnknownPattern(String),

    #[error("pattern error: {0}")]
    Pattern(String),

    #[error("invalid parameters for `{pattern}`: {reason}")]
    Params { pattern: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("codec error in field `{field}`: {reason}")]
    Codec { field: &'static str, reason: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("input error: {0}")]
    Input(String),

    /// Some records failed while the rest of the run completed.
    #[error("{failed} record(s) failed, see {log}")]
    Partial { failed: usize, log: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn codec(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Codec { field, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 1 for partial data errors, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Partial { .. } => 1,
            _ => 2,
        }
    }
}
