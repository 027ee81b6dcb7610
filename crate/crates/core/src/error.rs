use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tube degenerate: 1 - eps*v*kappa(s) = {rho} <= 0 at s = {s}, v = {v}")]
    TubeDegenerate { s: f64, v: f64, rho: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid epsilon {0}: must satisfy 0 < eps < 1")]
    InvalidEpsilon(f64),

    #[error("grid too coarse: n_s = {n_s}, n_f = {n_f} (minimum 16 each)")]
    GridTooCoarse { n_s: usize, n_f: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("eigensolver did not converge after {iterations} iterations (max residual {max_residual:e}, tol {tol:e})")]
    NoConvergence {
        iterations: usize,
        max_residual: f64,
        tol: f64,
    },

    #[error("factorization of K - ({shift})W failed; the shift is not below the spectrum")]
    FactorizationFailed { shift: f64 },

    #[error("degenerate field: {zeros} of {total} vertices are exactly zero")]
    DegenerateField { zeros: usize, total: usize },

    #[error("empty set passed to a distance computation")]
    EmptySet,

    #[error("non-transversal zero near s = {s} (slope {slope:e})")]
    NonTransversalZero { s: f64, slope: f64 },

    #[error("effective eigenvalue {index} is not simple (gap {gap:e})")]
    DegenerateEffectiveEigenvalue { index: usize, gap: f64 },

    #[error("pairing ambiguous: {count} rescaled full eigenvalues lie within 1e-8 of mu_{index}")]
    PairingAmbiguous { index: usize, count: usize },

    #[error("mode {index} is outside the computed window of {available} eigenpairs")]
    ModeOutOfRange { index: usize, available: usize },

    #[error("rate fit needs at least 3 usable points, got {0}")]
    InsufficientPoints(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
