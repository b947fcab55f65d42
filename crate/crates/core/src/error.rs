use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trace too short: {len} samples, need at least {min}")]
    TraceTooShort { len: usize, min: usize },

    #[error("signal too short: {len} samples, need more than {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("non-finite value in input at sample {index}")]
    NonFiniteInput { index: usize },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("invalid frame sequence: {0}")]
    InvalidFrames(String),

    #[error("signal is constant (std {std:e} below tolerance)")]
    ConstantSignal { std: f64 },

    #[error("invalid band [{lo}, {hi}] Hz for sampling rate {fs} Hz")]
    InvalidBand { lo: f64, hi: f64, fs: f64 },

    #[error("region of interest is empty")]
    EmptyRoi,

    #[error("grid {rows}x{cols} larger than roi {roi_h}x{roi_w}")]
    GridLargerThanRoi {
        rows: usize,
        cols: usize,
        roi_h: usize,
        roi_w: usize,
    },

    #[error("covariance matrix is rank deficient (smallest eigenvalue {min_eigenvalue:e})")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("gram matrix is singular")]
    SingularGram,

    #[error("window of {window_s} s longer than trace of {trace_s} s")]
    WindowLongerThanTrace { window_s: f64, trace_s: f64 },

    #[error("method {method} requires pixel data (a frame sequence)")]
    RequiresPixelData { method: String },

    #[error("degenerate eigenstructure at frame {frame}")]
    DegenerateEigenstructure { frame: usize },

    #[error("input kind incompatible with method {method}")]
    IncompatibleInput { method: String },

    #[error("evaluation window of {window_s} s yields {samples} samples, need at least 2")]
    WindowTooShort { window_s: f64, samples: usize },

    #[error("no complete window of {window_s} s fits in a {signal_s} s signal")]
    NoCompleteWindow { window_s: f64, signal_s: f64 },

    #[error("frequency band [{lo}, {hi}] Hz contains no spectral bins")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("fewer than two peaks detected ({found})")]
    TooFewPeaks { found: usize },

    #[error("label streams do not overlap in time")]
    NoOverlap,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is empty or too short: {len} values, need at least {min}")]
    InsufficientData { len: usize, min: usize },

    #[error("constant input: correlation undefined")]
    ConstantInput,

    #[error("truth value is zero at index {index}")]
    ZeroTruth { index: usize },

    #[error("heart rate {hr_bpm} bpm outside band [{lo}, {hi}] bpm")]
    HrOutOfBand { hr_bpm: f64, lo: f64, hi: f64 },

    #[error("invalid synthetic parameters: {0}")]
    InvalidSpec(String),

    #[error("malformed file {path}: {reason} (at {position})")]
    MalformedFile {
        path: PathBuf,
        position: String,
        reason: String,
    },

    #[error("record {subject_id} is missing a {label} label")]
    MissingLabel { subject_id: String, label: String },

    #[error("label clock differs from video clock by {offset_s:.3} s")]
    ClockMismatch { offset_s: f64 },

    #[error("ITA undefined: L* = {l:.3}, b* = {b:.3}")]
    DegenerateColor { l: f64, b: f64 },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Errors caused by a bad configuration file rather than bad data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::ConfigInvalid { .. })
    }
}
