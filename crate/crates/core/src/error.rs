use std::fmt;

use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("frequency {hz} Hz is outside [0, {nyquist}] Hz")]
    AboveNyquist { hz: f64, nyquist: f64 },

    #[error("band [{lower}, {upper}) Hz holds no frequency index at resolution {resolution} Hz")]
    EmptyBand { lower: f64, upper: f64, resolution: f64 },

    #[error("AR(2) coefficients ({phi1}, {phi2}) are not stationary")]
    NonStationary { phi1: f64, phi2: f64 },

    #[error("coherence undefined: a channel has zero power at this frequency")]
    UndefinedCoherence,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },

    #[error("parameter {value} outside the admissible range of the {family} copula")]
    Parameter { family: &'static str, value: f64 },

    #[error("rank coherence {tau} is not attainable by the {family} copula")]
    InversionDomain { family: &'static str, tau: f64 },

    #[error("degenerate dependence: {0}")]
    Degenerate(String),

    #[error("no candidate family is admissible for this sample")]
    NoAdmissibleFamily,

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Stable error codes reported by the data readers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestCode {
    BadMagic,
    MalformedHeader,
    CountMismatch,
    NonFinite,
    BadValue,
    MissingSample,
    DuplicateSample,
}

impl IngestCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IngestCode::BadMagic => "BAD_MAGIC",
            IngestCode::MalformedHeader => "MALFORMED_HEADER",
            IngestCode::CountMismatch => "COUNT_MISMATCH",
            IngestCode::NonFinite => "NON_FINITE",
            IngestCode::BadValue => "BAD_VALUE",
            IngestCode::MissingSample => "MISSING_SAMPLE",
            IngestCode::DuplicateSample => "DUPLICATE_SAMPLE",
        }
    }
}

impl fmt::Display for IngestCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A data-file problem. `row` is the 1-based line number for CSV input.
#[derive(Debug, Error)]
#[error("{code}{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
pub struct IngestError {
    pub code: IngestCode,
    pub row: Option<usize>,
    pub message: String,
}

impl IngestError {
    pub fn new(code: IngestCode, message: impl Into<String>) -> Self {
        Self {
            code,
            row: None,
            message: message.into(),
        }
    }

    pub fn at_row(code: IngestCode, row: usize, message: impl Into<String>) -> Self {
        Self {
            code,
            row: Some(row),
            message: message.into(),
        }
    }
}
