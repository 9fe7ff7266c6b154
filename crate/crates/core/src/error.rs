use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid record for subject {subject}: {reason}")]
    InvalidRecord { subject: String, reason: String },

    #[error("record too short for subject {subject}: {len} samples, window needs {window}")]
    RecordTooShort {
        subject: String,
        len: usize,
        window: usize,
    },

    #[error("invalid band: need 0 < low ({low}) < high ({high}) < fs/2 ({nyquist})")]
    InvalidBand { low: f64, high: f64, nyquist: f64 },

    #[error("invalid filter order {0}")]
    InvalidOrder(usize),

    #[error("segment too short for PSD: {len} samples, nperseg {nperseg}")]
    SegmentTooShort { len: usize, nperseg: usize },

    #[error("invalid Welch parameters: {0}")]
    InvalidWelch(String),

    #[error("insufficient pulses: found {found} peak(s), need at least 2")]
    InsufficientPulses { found: usize },

    #[error("corrupt segment {index} of subject {subject}: non-finite sample")]
    CorruptSegment { subject: String, index: usize },

    #[error("degenerate feature table: every column was dropped")]
    DegenerateFeatureTable,

    #[error("no metadata for subject {0}")]
    MissingMetadata(String),

    #[error("invalid metadata for subject {subject}: {reason}")]
    InvalidMetadata { subject: String, reason: String },

    #[error("too few subjects: {found} labeled, need at least {required}")]
    TooFewSubjects { found: usize, required: usize },

    #[error("invalid training input: {0}")]
    InvalidTrainingData(String),

    #[error("feature width mismatch: {0}")]
    WidthMismatch(String),

    #[error("evaluation needs at least 2 paired values, got {0}")]
    TooFewPairs(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unsupported model format version {found}, expected {expected}")]
    ModelVersion { found: u64, expected: u64 },

    #[error("model lacks cover data")]
    MissingCover,

    #[error("unknown feature {0}")]
    UnknownFeature(String),

    #[error("no severity bands defined for population {0}")]
    NoSeverityBands(String),

    #[error("invalid synthetic config: {0}")]
    InvalidSynthConfig(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),

    #[error("malformed CSV {}: {reason}", path.display())]
    MalformedCsv { path: PathBuf, reason: String },

    #[error("parse error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
