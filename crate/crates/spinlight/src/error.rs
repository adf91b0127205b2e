//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction and the numerical engines.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter failed validation.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    /// An iterative solver did not reach the requested residual.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// Two eigenvalues are indistinguishable in real part at the top of the
    /// spectrum; the caller decides which branch to follow.
    #[error("degenerate dominant eigenvalue: {first} and {second} within {gap:.3e} in real part")]
    DegenerateDominant {
        first: num_complex::Complex64,
        second: num_complex::Complex64,
        gap: f64,
    },

    /// The signal derivative underlying an estimation error vanished.
    #[error("degenerate signal: |d(signal)/d(phi)| = {derivative:.3e} below threshold")]
    DegenerateSignal { derivative: f64 },

    /// A propagated state violated a conservation law, signalling that the
    /// step size was too large.
    #[error("Casimir drift {drift:.3e} exceeds tolerance {tolerance:.1e} (dt = {dt:.3e})")]
    CasimirDrift { drift: f64, tolerance: f64, dt: f64 },

    /// Fixed-step propagation lost accuracy (trace or norm blew up).
    #[error("propagation step failure: {reason}")]
    StepFailure { reason: String },

    /// A computed state failed a physicality check.
    #[error("state validation failed: {reason}")]
    InvalidState { reason: String },

    /// Power-law fitting rejects non-positive data or too few points.
    #[error("invalid fit input: {reason}")]
    InvalidFitInput { reason: String },

    /// Error raised by the dense linear-algebra backend.
    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}
