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

    /// Transport failure after exhausting retries. Safe to re-run.
    #[error("network failure after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },

    #[error("rate limited (HTTP 429) after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },

    #[error("malformed payload at byte {offset}: {message}")]
    Payload { offset: usize, message: String },

    #[error("malformed record for document {doc_id}: {message}")]
    Record { doc_id: String, message: String },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: String },

    #[error("gazetteer: {0}")]
    Gazetteer(String),

    #[error("{0}")]
    Validation(String),

    #[error("missing input {path}; run `relex {producer}` first")]
    MissingInput { path: PathBuf, producer: &'static str },

    #[error("training: {0}")]
    Training(String),

    #[error("classifier {model}: {message}")]
    Classifier { model: String, message: String },

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    /// Process exit code used by the CLI: 1 for bad input or configuration,
    /// 2 for failures while doing the work.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Payload { .. }
            | Error::Record { .. }
            | Error::Format { .. }
            | Error::Version { .. }
            | Error::Gazetteer(_)
            | Error::Validation(_)
            | Error::MissingInput { .. }
            | Error::Config(_) => 1,
            Error::Io { .. }
            | Error::Network { .. }
            | Error::RateLimited { .. }
            | Error::Training(_)
            | Error::Classifier { .. }
            | Error::Protocol(_) => 2,
        }
    }
}
