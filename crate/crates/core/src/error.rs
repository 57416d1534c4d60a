use std::fmt;

use thiserror::Error;

/// Errors raised by matrix construction, I/O and model fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid item bank: {0}")]
    ItemBank(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid cell value {value} at row {row}, column {column}: {reason}")]
    CellValue {
        row: usize,
        column: usize,
        value: String,
        reason: String,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown item id `{0}` (not present in the item bank)")]
    UnknownItem(String),

    #[error("matrix is not pruned: {0}; run pruning (--prune) first")]
    NotPruned(String),

    #[error("model {0} cannot be fitted: {1}")]
    UnsupportedModel(String, String),

    #[error("scheme {0} is not accepted here: {1}")]
    UnsupportedScheme(String, String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("undefined statistic: {0}")]
    Undefined(#[from] Undefined),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Reason a statistic could not be computed.
///
/// Statistics that are undefined for the given data are returned as values of
/// this type rather than panicking, so reports can carry them as `NA`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Undefined {
    LengthMismatch { left: usize, right: usize },
    TooShort { len: usize },
    ConstantVector,
    SingleClass,
    NotDichotomous,
    MeanOutOfRange,
    ZeroVariance,
    TooFewItems,
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undefined::LengthMismatch { left, right } => {
                write!(f, "vector lengths differ ({left} vs {right})")
            }
            Undefined::TooShort { len } => write!(f, "need at least 2 observations, got {len}"),
            Undefined::ConstantVector => f.write_str("constant vector"),
            Undefined::SingleClass => f.write_str("dichotomous column has a single class"),
            Undefined::NotDichotomous => f.write_str("column is not dichotomous"),
            Undefined::MeanOutOfRange => f.write_str("column mean outside (0, 1)"),
            Undefined::ZeroVariance => f.write_str("zero score variance"),
            Undefined::TooFewItems => f.write_str("need at least 2 items"),
        }
    }
}

impl std::error::Error for Undefined {}

/// A statistic that is either a value or an explicit undefined marker.
pub type Stat = std::result::Result<f64, Undefined>;
