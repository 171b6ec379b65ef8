use thiserror::Error;

/// Errors produced by the numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invariant pairing is singular (|det K| = {0:e})")]
    SingularPairing(f64),

    #[error("logarithm requested outside its domain: |g - I| = {norm:e} exceeds radius {radius:e}")]
    LogDomain { norm: f64, radius: f64 },

    #[error("Ad_g - 1 is singular on the stabilizer complement (singular value {0:e})")]
    Degenerate(f64),

    #[error("cross-section is not transversal: {0}")]
    Transversality(String),

    #[error("action is not locally free at the sample point (smallest singular value {0:e})")]
    Stabilizer(f64),

    #[error("splitting g = g_p + g'_x failed: {0}")]
    Splitting(String),

    #[error("function evaluation returned a non-finite value: {0}")]
    NonFinite(String),

    #[error("chart point {0} lies outside the interior of the chart box")]
    Domain(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("span of the given vectors is not closed under the bracket (residual {0:e})")]
    NotSubalgebra(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
