//! Library error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (exit code 1 at the CLI).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical evaluation produced a non-finite value.
    #[error("non-finite value {value} at node ({at0}, {at1})")]
    NonFinite { at0: f64, at1: f64, value: f64 },

    /// Matrix assembly produced a non-finite entry.
    #[error("non-finite kernel matrix entry at ({row}, {col})")]
    Assembly { row: usize, col: usize },

    /// Eigensolver failed to converge.
    #[error("eigensolver did not converge after {iterations} iterations (eigenvalue index {index})")]
    EigenConvergence { iterations: usize, index: usize },

    /// Nyström extension refused: eigenvalue too small to divide by.
    #[error("eigenvalue magnitude {magnitude:.3e} below 1e-12; extension refused")]
    TinyEigenvalue { magnitude: f64 },

    /// Left/right pairing is numerically defective.
    #[error("near-defective eigenpair {index}: |l^T r| = {pairing:.3e}")]
    NearDefective { index: usize, pairing: f64 },

    /// Spectral assembly left a complex residue that should have cancelled.
    #[error("imaginary residue {residue:.3e} exceeds tolerance; conjugate pairs mishandled")]
    ImaginaryResidue { residue: f64 },

    /// Requested accuracy could not be reached.
    #[error("accuracy target {target:.3e} not reached (estimate {achieved:.3e})")]
    Accuracy { target: f64, achieved: f64 },

    /// Numerical failure during iteration (exit code 2 at the CLI).
    #[error("numerical error at step {step}: {message}")]
    Numerical { step: usize, message: String },

    /// Mismatched inputs to a comparison.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn non_finite_at(at0: f64, at1: f64, value: f64) -> Self {
        Error::NonFinite { at0, at1, value }
    }
}
