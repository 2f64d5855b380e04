use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "m={modes}, n={photons} needs {what} = {size}, above the configured cap of {cap}; \
         raise the dimension guard if this is intentional"
    )]
    DimensionGuard {
        modes: usize,
        photons: usize,
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("photon number mismatch: expected {expected}, found {found}")]
    PhotonMismatch { expected: usize, found: usize },

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("state has no {0}-photon block")]
    MissingBlock(usize),

    #[error("matrix is not unitary: max deviation {0:e}")]
    NotUnitary(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectral split failed: {0}")]
    SpectralSplit(String),

    #[error("need at least {needed} values, got {available}")]
    InsufficientValues { needed: usize, available: usize },

    #[error("classical shadow is empty")]
    EmptyShadow,

    #[error("outcome {0:?} has zero resolution probability under this detector configuration")]
    ZeroResolutionFactor(Vec<u32>),

    #[error(transparent)]
    Cache(#[from] CacheError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for bad input or configuration, 3 for a
    /// dimension guard refusal, 4 for a damaged channel cache, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionGuard { .. } => 3,
            Error::Cache(CacheError::Missing(_)) => 2,
            Error::Cache(_) => 4,
            Error::PhotonMismatch { .. }
            | Error::ModeMismatch { .. }
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::MissingBlock(_)
            | Error::NotUnitary(_)
            | Error::InvalidInput(_)
            | Error::EmptyShadow
            | Error::ZeroResolutionFactor(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::SpectralSplit(_) | Error::InsufficientValues { .. } => 1,
        }
    }
}

/// Failures while reading a persisted channel.
#[derive(Debug, Error)]
pub enum CacheError {
    #[error("missing cache file {0}")]
    Missing(PathBuf),
    #[error("cache format version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),
    #[error("corrupt cache entry {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}
