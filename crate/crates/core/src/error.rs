use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("space has no points")]
    EmptySpace,

    #[error("point `{id}` has non-positive weight {weight}")]
    NonPositiveWeight { id: String, weight: f64 },

    #[error("distance matrix is not symmetric at ({a}, {b}): {ab} vs {ba}")]
    AsymmetricDistance { a: String, b: String, ab: f64, ba: f64 },

    #[error("triangle inequality fails for ({a}, {b}, {c}): d(a,c) = {ac} > {via}")]
    TriangleViolation { a: String, b: String, c: String, ac: f64, via: f64 },

    #[error("invalid distance between `{a}` and `{b}`: {value}")]
    InvalidDistance { a: String, b: String, value: f64 },

    #[error("graph is disconnected: `{0}` is unreachable")]
    Disconnected(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("unknown point {0}")]
    UnknownPoint(String),

    #[error("field has {got} values but the space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("the open set is the whole space; use the local variant (Omega = X branch)")]
    OmegaIsWholeSpace,

    #[error("partition of unity denominator vanishes at point {0}")]
    UncoveredPoint(usize),

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by invalid user input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Solver(_))
    }
}

pub(crate) fn check_exponent(name: &'static str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param(name, format!("exponent must be >= 1, got {p}")));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}
