//! Error type shared by every module.

use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, HbError>;

/// Coarse classification of an error, used by callers (e.g. the CLI) to map
/// errors onto exit codes: usage errors are caller mistakes in how an
/// operation was invoked, data errors are problems with the values or files
/// an operation was given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
}

#[derive(Debug, Error)]
pub enum HbError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("column {index} of {what} is not unit-norm (norm {norm}); normalize inputs first")]
    NotNormalized {
        what: &'static str,
        index: usize,
        norm: f64,
    },

    #[error("column {index} has near-zero norm {norm}; cannot normalize")]
    ZeroNormColumn { index: usize, norm: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid sample weights: {0}")]
    InvalidWeights(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("rejection filter acceptance rate {rate:.3e} is below 1e-4; increase eps")]
    FilterTooStrict { rate: f64 },

    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error in {path}: {reason}")]
    Config { path: PathBuf, reason: String },
}

impl HbError {
    /// Usage errors are misuses of an operation (empty inputs, invalid
    /// parameter values passed programmatically); everything else is a
    /// problem with the data being processed.
    pub fn class(&self) -> ErrorClass {
        match self {
            HbError::EmptyInput(_) | HbError::InvalidParameter { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HbError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        HbError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        HbError::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
