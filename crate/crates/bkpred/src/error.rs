use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors surfaced by the command line. Each variant maps to one exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// 0 is success; 1 usage/config; 2 data (including unreadable inputs); 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Data(_) | Error::Io { .. } => 2,
            Error::Internal(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        Error::Data(msg.to_string())
    }
}

macro_rules! data_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Error {
            fn from(e: $t) -> Self {
                Error::Data(e.to_string())
            }
        }
    )*};
}

data_from!(
    bkpred_core::corpus::CorpusError,
    bkpred_core::labeling::LabelError,
    bkpred_core::features::FeatureError,
    bkpred_core::models::ModelError,
    bkpred_core::eval::EvalError,
    bkpred_core::ensemble::EnsembleError,
    bkpred_core::llm::LlmError,
    csv::Error,
    serde_json::Error
);
