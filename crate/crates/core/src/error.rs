use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// `invert_polylog` was asked for a target above `zeta(s)`; the caller
    /// must switch to the saturated branch `z = 1`.
    #[error("polylog target {target} exceeds zeta({s}) = {limit}")]
    Saturated { s: f64, target: f64, limit: f64 },

    #[error("invalid tolerance {0}: must lie in (0, 1e-3)")]
    InvalidTolerance(f64),

    #[error("pattern error: {0}")]
    Pattern(String),

    #[error("assignment error: {0}")]
    Assignment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
