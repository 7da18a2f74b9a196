use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema mismatch in {file}: expected columns [{expected}], found [{actual}]")]
    Schema {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular design matrix: column(s) {} are linearly dependent on preceding columns", .columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("logistic fit did not converge: {0}; check the data for complete or quasi-complete separation")]
    NonConvergence(String),

    #[error("Rashomon set degenerate: {0}")]
    Degenerate(String),

    #[error("Rashomon sampling accepted {accepted} models (< {required}) after {rounds} round(s); acceptance rate {rate:.4}; per-bin counts {bins:?}")]
    InsufficientSamples {
        accepted: usize,
        required: usize,
        rounds: usize,
        rate: f64,
        bins: Vec<usize>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Degenerate(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::Schema { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::MissingColumn(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::DimensionMismatch { .. }
            | Error::SingularDesign { .. } => ErrorClass::Data,
            Error::NonConvergence(_)
            | Error::InsufficientSamples { .. }
            | Error::Numeric(_) => ErrorClass::Numeric,
        }
    }
}
