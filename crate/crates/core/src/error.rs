use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("covariance is not Hermitian (max |μ − μ†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("scatterer is not passive (largest singular value {max_singular_value})")]
    NotPassive { max_singular_value: f64 },

    #[error("transmission eigenvalue T[{index}] = {value} outside [0, 1]")]
    TransmissionOutOfRange { index: usize, value: f64 },

    #[error("ensemble transmission must be resolved to eigenvalues or a matrix first")]
    UnresolvedEnsemble,

    #[error("invalid input: {0}")]
    Invalid(ValidationReport),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ξ = {xi} is outside the convergence domain (ξ_max = {xi_max})")]
    OutOfDomain { xi: f64, xi_max: f64 },

    #[error("broadband profile is empty")]
    EmptyProfile,

    #[error("broadband profile has zero mean occupation")]
    ZeroMean,

    #[error("moment of order {0} is not supported (1 ≤ p ≤ 4)")]
    UnsupportedMoment(u32),

    #[error("Haar-averaged Fano factor needs ⟨μ⟩ > 0 and ⟨τ⟩ > 0")]
    ZeroMoment,

    #[error("no saddle point: count {n} is not reachable")]
    NoSaddle { n: f64 },

    #[error("generating function is degenerate (all eigenvalues zero)")]
    Degenerate,

    #[error("tail rate undefined for an all-zero spectrum")]
    ZeroSpectrum,

    #[error("empty sample")]
    Empty,

    #[error("characteristic function evaluation overflowed")]
    Overflow,
}
