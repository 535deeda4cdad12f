use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("missing band {0}")]
    MissingBand(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("no valid samples")]
    NoValidSamples,

    #[error("unmapped label codes: {0:?}")]
    UnmappedCodes(Vec<u32>),

    #[error("label code {0} outside the class schema")]
    InvalidLabel(u32),

    #[error("height must be in meters")]
    NormalizedHeight,

    #[error("no scoreable classes")]
    NoScoreableClasses,

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
