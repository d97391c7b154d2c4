//! Photodetection counting statistics of degenerate chaotic radiation.
//!
//! A chaotic (Gaussian) source is described by its mode covariance `μ`; a
//! passive linear scatterer by its transmission matrix `t`. Everything the
//! photodetector sees over `ν` independent coherence cells follows from the
//! spectrum of the Hermitian matrix `t μ t†`:
//!
//! ```text
//! F(ξ) = ln Σ_n e^{ξn} P(n) = −ν Σ_k ln[1 − (e^ξ − 1) λ_k]
//! ```
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: domain types, validation and the spectral reduction.
//! - [`genfn`]: the cumulant generating function, cumulants, Fano factors.
//! - [`ensembles`]: analytic transmission-eigenvalue densities, samplers,
//!   Haar-distributed eigenvectors and the Haar-averaged Fano factor.
//! - [`pmf`]: the count distribution by exact (tilted) Fourier inversion,
//!   by saddle point, and closed-form references.
//! - [`montecarlo`]: a brute-force sampling oracle that draws coherent-state
//!   amplitudes and Poisson counts directly.
//! - [`scenario`]: the JSON input schema.
//!
//! Notation clash: `ν = t·δω/2π` counts coherence cells, where `t` is the
//! counting time. The transmission matrix is also called `t`. In code the
//! former is always `cells` and the latter `TransmissionSpec`.

pub mod ensembles;
pub mod error;
pub mod genfn;
pub mod model;
pub mod montecarlo;
pub mod pmf;
pub mod quad;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
pub use genfn::{CountingCgf, CumulantSummary, DoubleBarrierCgf, GeneratingFunction, Statistics};
pub use model::{
    reduce_to_spectrum, validate, CountingWindow, Ensemble, ModeCovariance, ProfileBin,
    RegimeWarning, SpectralData, TransmissionSpec, ValidationIssue, ValidationReport,
};
pub use pmf::{CountDistribution, Diagnostics, Method};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
