use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected} values, got {actual}")]
    InputShape { expected: usize, actual: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("{path}: parse error at row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("chromosome codec error: expected {expected} bits, got {actual}")]
    Codec { expected: usize, actual: usize },

    #[error("population size error: need {needed} offspring, got {available}")]
    PopulationSize { needed: usize, available: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("model document error: {0}")]
    Document(String),

    #[error("generation {generation}: {source}")]
    Generation {
        generation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input (configuration, schema, missing files)
    /// rather than a failure during a run.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::Io { .. } | Error::Json(_) => true,
            Error::Generation { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
