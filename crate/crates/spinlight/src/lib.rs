//! Numerical and analytic toolkit for phase estimation with the output light
//! of collectively emitting spin ensembles.
//!
//! The library models N two-level emitters driven at Rabi frequency `omega`
//! and decaying collectively at rate `kappa` inside the maximally polarized
//! spin sector. On top of that model it provides:
//!
//! * vectorized Lindblad generators for the single ensemble and for a
//!   source-decoder cascade, plus their deformed/tilted variants whose
//!   dominant eigenvalues encode photon-counting and homodyne statistics,
//! * a spectral engine (steady states, dominant eigenvalues, propagation,
//!   two-time correlations, finite-difference derivative extraction),
//! * metrology quantities: quantum Fisher information rates of the emission
//!   field, homodyne and absorber estimation errors, power-law scaling fits,
//! * closed-form companions (Holstein-Primakoff and superspin perturbation
//!   theory) used both as fast evaluators and as test oracles,
//! * thermodynamic-limit mean-field dynamics of the cascaded system,
//! * stationary-state diagnostics (intensity, purity, reduced entropies).
//!
//! All rates are measured in units of `kappa` unless stated otherwise, and
//! estimation errors are time-rescaled (`delta_phi_bar = delta_phi * sqrt(T)`,
//! in units of `kappa^(-1/2)`).

pub mod analytics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod meanfield;
pub mod metrology;
pub mod observables;
pub mod params;
pub mod spectral;
pub mod spin;

pub use error::Error;
pub use params::ModelParams;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

// Force linkage of the system BLAS/LAPACK backend.
extern crate openblas_src as _;
