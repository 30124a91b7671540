//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:.3e} at row {index} (tolerance {tol:.0e})")]
    NotPositiveDefinite { index: usize, pivot: f64, tol: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("metric '{metric}' cannot be used with {kind} objects")]
    KindMismatch { metric: &'static str, kind: &'static str },

    #[error("invalid distance matrix at ({row}, {col}): {reason}")]
    InvalidDistanceMatrix { row: usize, col: usize, reason: String },

    #[error("labels contain a single class; both +1 and -1 are required")]
    SingleClass,

    #[error("no samples match the requested class filter")]
    EmptyClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter '{name}': {reason}")]
    BadParam { name: &'static str, reason: String },

    #[error("invalid size {got}: must lie in [{min}, {max}]")]
    BadSize { got: usize, min: usize, max: usize },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("class {class:+} has only {got} samples, need at least {need}")]
    TooFewPerClass { class: i8, got: usize, need: usize },

    #[error("training set has {got} rows, need at least k = {k}")]
    TooFewNeighbors { got: usize, k: usize },

    #[error("invalid feature set: {0}")]
    BadSet(String),

    #[error("{file}:{line}: parse error: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },

    #[error("validation failed for column {column}: {reason}")]
    Validation { column: usize, reason: String },

    #[error("column {index}: {source}")]
    Column {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("feature {feature} (regions {regions:?}), subject {subject}: {source}")]
    Submatrix {
        feature: usize,
        regions: Vec<usize>,
        subject: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a feature-column index to an error bubbling out of a per-column
    /// computation.
    pub fn in_column(self, index: usize) -> Error {
        Error::Column {
            index,
            source: Box::new(self),
        }
    }
}
