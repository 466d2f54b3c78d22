use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: u64, reason: String },

    #[error("dimension mismatch at {location}: expected {expected}, found {found}")]
    DimensionMismatch {
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error("empty matrix: {0}")]
    EmptyMatrix(String),

    #[error("dataset has {found} views but the encoder expects {expected}")]
    ViewCountMismatch { expected: usize, found: usize },

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("too few samples: have {n_samples}, need at least {required}")]
    TooFewSamples { n_samples: usize, required: usize },

    #[error("non-finite gradient in {context}")]
    NonFiniteGradient { context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no fold could be evaluated")]
    NoValidFolds,

    #[error("every candidate run is degenerate or failed")]
    AllRunsDegenerate,

    #[error("labeling is not linearly separable")]
    NotSeparable,

    #[error("no balanced labeling is linearly separable")]
    NoSeparableLabeling,

    #[error("loss increased for {consecutive} consecutive steps at step {step}")]
    DivergenceDetected { step: usize, consecutive: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
