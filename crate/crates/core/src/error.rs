use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("feature column `{column}` is not numeric (value `{value}` on line {line})")]
    NonNumericColumn {
        column: String,
        value: String,
        line: usize,
    },

    #[error("dataset has fewer than 2 classes")]
    TooFewClasses,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {class} has {count} instances, need at least {required}")]
    ClassTooSmall {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular covariance matrix (shrinkage {shrinkage})")]
    SingularCovariance { shrinkage: f64 },

    #[error("meta-feature `{feature}` failed: {source}")]
    MetaFeature {
        feature: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model container: {0}")]
    Container(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Csv {
            path: path.into(),
            message: err.to_string(),
        }
    }
}
