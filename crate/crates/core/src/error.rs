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
    #[error("missing column `{0}` in dataset header")]
    Schema(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("observation {id}: {message}")]
    Validation { id: String, message: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("model specification: {0}")]
    Specification(String),
    #[error(
        "non-finite value in attribute `{attribute}` for observation {observation}, mode {mode}"
    )]
    Data {
        observation: usize,
        mode: &'static str,
        attribute: &'static str,
    },
    #[error("degenerate choice set: {0} available alternative(s)")]
    DegenerateChoiceSet(usize),
    #[error("mode {0} is available for no observation")]
    UndefinedCell(&'static str),
    #[error("requested {requested} draw dimensions but only {available} prime bases exist")]
    DrawDimensions { requested: usize, available: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
