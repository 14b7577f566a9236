use thiserror::Error;

use crate::field::Space;

#[derive(Debug, Error)]
pub enum SbpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field is in {found:?} space, expected {expected:?}")]
    SpaceMismatch { expected: Space, found: Space },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("size mismatch: expected {expected} values, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time must be nonzero for this operator")]
    ZeroTime,
    #[error("resampling target falls outside the source box while the source carries mass near its edge ({edge_fraction:.3e})")]
    OutsideBox { edge_fraction: f64 },
    #[error("data not localized: mass fraction {inside:.3e} inside the half-box")]
    NotLocalized { inside: f64 },
    #[error("box too small: {0}")]
    BoxTooSmall(String),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },
    #[error("snapshot times must increase: {previous} then {next}")]
    NonMonotoneTime { previous: f64, next: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("scattering failure: {0}")]
    ScatteringFailure(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SbpError>;
