use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty file: no header or no data rows")]
    EmptyFile,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{0}` already exists")]
    ColumnExists(String),

    #[error("non-binary target: found values {0:?}")]
    NonBinaryTarget(Vec<String>),

    #[error("line {line}: quoted fields are not supported")]
    QuotedField { line: usize },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: category `{value}` contains the reserved separator `|`")]
    ReservedSeparator { line: usize, value: String },

    #[error("column `{column}` has {found} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("target labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),

    #[error("split fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input")]
    EmptyInput,

    #[error("scores and labels differ in length ({scores} vs {labels})")]
    InputLengthMismatch { scores: usize, labels: usize },

    #[error("undefined TPR: group `{0}` has no positive labels")]
    UndefinedTpr(String),

    #[error("undefined FPR: group `{0}` has no negative labels")]
    UndefinedFpr(String),

    #[error("AUC undefined: input contains a single class")]
    SingleClass,

    #[error("group `{0}` not present")]
    MissingGroup(String),

    #[error("at least two groups are required, got {0}")]
    TooFewGroups(usize),

    #[error("matrix width mismatch: model expects {expected} columns, got {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("nothing to report: record set is empty")]
    EmptyReport,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidFraction(_) | Error::InvalidParameter { .. } | Error::EmptyReport
        )
    }
}
