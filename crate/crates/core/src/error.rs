use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("no complete rows survived alignment")]
    NoRows,

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("dates are not strictly increasing at row {row}")]
    NonMonotoneDates { row: usize },

    #[error("cannot parse date `{value}` with format `{format}`")]
    DateParse { value: String, format: String },

    #[error("non-positive value {value} at row {row}, column `{column}`")]
    NonPositive {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("series is constant")]
    ConstantSeries,

    #[error("insufficient data: need at least {needed} observations, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("quantile regression did not converge for equation {equation}")]
    NotConverged { equation: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
