use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing mandatory column '{0}'")]
    MissingColumn(String),

    #[error("duplicate accession id '{0}'")]
    DuplicateId(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("empty cohort")]
    EmptyCohort,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model length too small: need at least {required}, got {n_model}")]
    ModelLengthTooSmall { required: usize, n_model: usize },

    #[error("SMOTE requires >=2 minority samples, found {0}")]
    SmoteMinority(usize),

    #[error("class {0} has no records")]
    MissingClass(u8),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape error in layer {layer} ({kind}): {message}")]
    Shape {
        layer: usize,
        kind: String,
        message: String,
    },

    #[error("backward called without a recorded forward pass")]
    NoForwardPass,

    #[error("registry hash mismatch: checkpoint has {found}, expected {expected}")]
    RegistryMismatch { expected: String, found: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("undefined metric: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
