use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is even; n must be odd")]
    EvenSampleCount(usize),
    #[error("grid size {0} is too small; n must be at least 3")]
    TooSmall(usize),
    #[error("band m={m} too wide for n={n}: 2m < n violated")]
    BandTooWide { m: usize, n: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("spectrum is not Hermitian at frequency {0}")]
    NonHermitianSpectrum(i64),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("amplitude vector is degenerate (zero norm)")]
    DegenerateAmplitude,
    #[error("reference amplitude a_1 is zero")]
    ZeroReferenceAmplitude,
    #[error("cross-spectral matrix is numerically zero")]
    DegenerateSpectrum,
    #[error("optimizer did not converge from any start")]
    NoConvergence,
    #[error("amplitude coordinate {0} is zero")]
    ZeroAmplitudeCoordinate(usize),
    #[error("shape spectrum is empty")]
    EmptySpectrum,
    #[error("shape is numerically constant")]
    DegenerateShape,
    #[error("fit did not converge")]
    NotConverged,
    #[error("estimated noise level is zero; intervals are degenerate")]
    ZeroNoise,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("ragged columns: {0}")]
    RaggedColumns(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
