use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature dimension mismatch: model expects {expected} columns, got {actual}")]
    FeatureMismatch { expected: usize, actual: usize },

    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("cannot keep {keep} of {available} {what}")]
    KeepCount {
        what: &'static str,
        keep: usize,
        available: usize,
    },

    #[error("unknown feature id {0}")]
    UnknownFeature(usize),

    #[error("duplicate feature id {0}")]
    DuplicateFeature(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite {what} at epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        batch: usize,
    },

    #[error("optimizer state does not match model shapes ({0}); reset the state after pruning")]
    StaleOptimizer(&'static str),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("AUC undefined: labels contain a single class")]
    SingleClass,

    #[error("{path}: missing values at rows {rows:?}")]
    MissingValues { path: PathBuf, rows: Vec<usize> },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown label '{0}'")]
    UnknownLabel(String),

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("epoch {epoch}: {source}")]
    AtEpoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_epoch(self, epoch: usize) -> Error {
        match self {
            e @ Error::AtEpoch { .. } => e,
            Error::NonFinite { what, batch, .. } => Error::NonFinite { what, epoch, batch },
            e => Error::AtEpoch {
                epoch,
                source: Box::new(e),
            },
        }
    }
}
