use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma has a pole at the non-positive integer {0}")]
    GammaPole(i64),

    #[error("zeta has a pole at s = 1 (|s - 1| = {0:e})")]
    ZetaPole(f64),

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("quadrature did not converge: last refinement changed the value by {change:e} (tol {tol:e})")]
    Nonconvergence { change: f64, tol: f64 },

    #[error("unsupported level {0}: expected a prime in [11, 5000]")]
    UnsupportedLevel(u64),

    #[error("Hecke operator index {n} is not supported at level {q} (only primes are built from matrices)")]
    UnsupportedHeckeIndex { n: u64, q: u64 },

    #[error("the Hecke space at level {0} is empty")]
    EmptySpace(u64),

    #[error("could not split the Hecke algebra at level {q} after {attempts} random combinations")]
    SplitFailure { q: u64, attempts: usize },

    #[error("eigenvalue table at level {q} is missing lambda({n})")]
    MissingPrime { q: u64, n: u64 },

    #[error("eigenvalue table at level {q} only reaches {have}, need {need}")]
    InsufficientTable { q: u64, have: u64, need: u64 },

    #[error("functional-equation sign is indeterminate (ratio {ratio})")]
    IndeterminateSign { ratio: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
