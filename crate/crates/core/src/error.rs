use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported PGM variant {magic:?} (only binary P5 is read)")]
    UnsupportedPgm { path: PathBuf, magic: String },

    #[error("{path}: malformed PGM header: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },

    #[error("{path}: truncated PGM payload, expected {expected} bytes, found {found}")]
    TruncatedPgm {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: malformed manifest: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("bag {bag}: bag frame count {found} differs from dataset frame count {expected}")]
    BagFrameCount {
        bag: String,
        expected: usize,
        found: usize,
    },

    #[error("bag {bag} frame {frame}: empty ROI mask")]
    EmptyRoi { bag: String, frame: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no ROI pixel has a sampling circle inside the image")]
    NoValidRoiPixel,

    #[error("{0} is undefined: zero denominator")]
    UndefinedMetric(&'static str),

    #[error("need samples of both classes: {0}")]
    SingleClass(String),

    #[error("not enough samples: {0}")]
    TooFewSamples(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than by the pipeline
    /// itself. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
