use thiserror::Error;

/// Errors raised by the qutrit geometry library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Gell-Mann index {0} out of range 1..=8")]
    InvalidIndex(u8),

    #[error("invalid basis label: {0}")]
    InvalidLabel(String),

    #[error("site count mismatch: n = {0} vs n = {1}")]
    SiteMismatch(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension {0} is not a power of 3 within the supported range")]
    NotQutritDimension(usize),

    #[error("operator is not Hermitian (max |M - M^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not traceless (|tr M| = {0:.3e})")]
    NotTraceless(f64),

    #[error("operator is not unitary (max |U^dag U - I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("body weight violation: {0}")]
    BodyWeight(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("segment {index} has zero cost and cannot be normalized")]
    ZeroCostSegment { index: usize },

    #[error("segment {index} is not normalized: F(H) = {cost:.6} > 1")]
    UnnormalizedSegment { index: usize, cost: f64 },

    #[error("spectrum of S0 + Q0 is degenerate: eigenvalue gap {gap:.3e} below {threshold:.1e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("geodesic integration unstable: relative energy drift {drift:.3e}; increase the step count")]
    UnstableIntegration { drift: f64 },

    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
