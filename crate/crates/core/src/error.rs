use thiserror::Error;

/// Errors raised across the lab. Check failures are reported as data, not
/// as errors; these variants are for inputs that cannot be processed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("CFL violation at site (t = {t:.6}, x = {x:.6}): dt = {dt:.6e} exceeds bound {bound:.6e}")]
    Cfl { t: f64, x: f64, dt: f64, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("support of source touches the lattice time boundary ({0})")]
    Boundary(String),

    #[error("solver inconsistency: {0}")]
    Solver(String),

    #[error("covariance violation: {0}")]
    Covariance(String),

    #[error("atlas construction failed: {0}")]
    Atlas(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
