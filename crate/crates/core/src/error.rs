use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid hierarchy coefficients: {0}")]
    InvalidCoeffs(String),

    #[error("KvM reduction inconsistent: b-component of embedded field is {0:e}")]
    ReductionInconsistent(f64),

    #[error("guard band violated at t = {t}: tail margin {margin} < {required}")]
    GuardBand { t: f64, margin: i64, required: i64 },

    #[error("step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("background is not normalized (a0 = {a0}, b0 = {b0}); normalize the state first")]
    Unnormalized { a0: f64, b0: f64 },

    #[error("k = {0} is at a band edge")]
    BandEdge(num_complex::Complex64),

    #[error("eigenvector for lambda = {lambda} is not localized inside the truncation (edge mass {mass:e}); increase the truncation")]
    Localization { lambda: f64, mass: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("branch tracking failed: {0}")]
    BranchTracking(String),

    #[error("indicator overflow at radius {0}")]
    Overflow(f64),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    #[error("numerical contradiction: {0}")]
    NumericalContradiction(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
