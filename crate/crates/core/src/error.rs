use std::path::PathBuf;

/// Errors produced by the feature-selection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("feature names must be unique; `{0}` appears more than once")]
    DuplicateFeatureName(String),

    #[error("feature index {index} out of range (m = {m})")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("feature `{0}` has zero class-balanced deviation; drop it before normalizing")]
    ZeroDeviation(String),

    #[error("class `{class}` has {count} instances, fewer than the {folds} folds requested")]
    TooFewInstances {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("linear solve failed: {0}")]
    Solve(#[from] crate::linalg::NotPositiveDefinite),

    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in `{path}`: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("non-numeric cell at line {line}, column `{column}`: {value:?}")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },

    #[error("missing value at line {line}, column `{column}`")]
    MissingValue { line: u64, column: String },

    #[error("dataset has {0} instances; at least 2 are required")]
    TooFewRows(usize),

    #[error("no features survive the variance floor")]
    NoFeatures,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
