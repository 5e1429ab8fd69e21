use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MlpacError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MlpacError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error at line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MlpacError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MlpacError::Io {
            path: path.into(),
            source,
        }
    }
}
