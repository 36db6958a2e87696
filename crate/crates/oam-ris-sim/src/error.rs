//! Crate-wide error type.
//!
//! Numerical degeneracies (near-singular equalizers, empty null spaces,
//! all-zero channel gains) are separated from hard usage errors so the sweep
//! runner can resample a fresh scenario instead of aborting.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix argument contained NaN or infinity.
    #[error("{context}: non-finite entry at ({row}, {col})")]
    NonFinite {
        context: &'static str,
        row: usize,
        col: usize,
    },

    /// The iterative SVD kernel failed to reduce the bidiagonal form.
    #[error("singular value decomposition did not converge")]
    SvdDidNotConverge,

    /// A system matrix handed to the Hermitian solver was not Hermitian.
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A solve succeeded but left a residual too large to trust.
    #[error("linear solve residual {residual:.3e} exceeds relative tolerance {tolerance:.1e}")]
    SolveResidual { residual: f64, tolerance: f64 },

    /// A receive ring was requested at a right-angle tilt where the
    /// orientation construction degenerates.
    #[error("receive ring tilt {which} is at or beyond a right angle")]
    TangentSingularity { which: &'static str },

    /// A propagation path had zero length, so the free-space law is undefined.
    #[error("zero-length path between source {source_index} and destination {destination_index}")]
    ZeroDistance {
        source_index: usize,
        destination_index: usize,
    },

    /// More vortex modes were requested than receive antennas can separate.
    #[error("{streams} modes are not separable by {antennas} receive antennas")]
    ModesNotSeparable { streams: usize, antennas: usize },

    /// The interference rows of one user left too little null space for its
    /// streams.
    #[error("user {user}: interference rank {rank} leaves fewer than {needed} null directions")]
    NullSpaceDeficient {
        user: usize,
        rank: usize,
        needed: usize,
    },

    /// A per-user equalizer target was too close to singular to invert.
    #[error("user {user}: equalizer condition number {condition:.3e} exceeds {limit:.1e}")]
    DegenerateGeometry {
        user: usize,
        condition: f64,
        limit: f64,
    },

    /// Every stream gain was zero, so no power allocation exists.
    #[error("no stream has a usable channel gain")]
    NoUsableChannel,

    /// A configuration value failed validation.
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// File-system failure, annotated with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures that stem from an unlucky random scenario rather
    /// than a caller mistake; the sweep runner retries these with a fresh
    /// derived seed.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGeometry { .. }
                | Error::NullSpaceDeficient { .. }
                | Error::NoUsableChannel
                | Error::ZeroDistance { .. }
        )
    }

    /// Shorthand for configuration validation failures.
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
