use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("non-finite value at {context}")]
    NonFinite { context: String },
    #[error("circulant embedding is not nonnegative definite (min eigenvalue {min_eigenvalue:e}); use method exact-cholesky instead")]
    NonPositiveEmbedding { min_eigenvalue: f64 },
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("CFL violation: max|u| dt/dx = {courant:.3} exceeds {limit}; suggested dt <= {suggested_dt:e}")]
    Cfl {
        courant: f64,
        limit: f64,
        suggested_dt: f64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
