//! Domain types, input validation, and the reduction of a (source, scatterer)
//! pair to the spectrum of `t μ t†`.
//!
//! The counting statistics depend on `μ` and `t` only through the determinant
//! `det[1 − (e^ξ − 1) μ t† t]`. We never diagonalize the non-Hermitian product
//! `μ t† t`; its nonzero spectrum coincides with that of the congruent
//! Hermitian matrix `t μ t†`, which a symmetric eigensolver handles with a
//! guaranteed real spectrum.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64};

/// Relative tolerance for structural checks (Hermiticity, PSD, passivity).
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Relative tolerance for spectral identities (trace preservation).
pub const SPECTRAL_TOL: f64 = 1e-8;

/// Covariance of the Gaussian source in the coherent-state representation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeCovariance {
    /// `μ = f · 1` over `modes` modes (thermal-like, occupation `f`).
    Scalar { f: f64, modes: usize },
    /// General Hermitian positive-semidefinite `μ`.
    Matrix(CMatrix),
}

impl ModeCovariance {
    pub fn scalar(f: f64, modes: usize) -> Self {
        Self::Scalar { f, modes }
    }

    /// Real diagonal covariance.
    pub fn diagonal(values: &[f64]) -> Self {
        Self::Matrix(real_diagonal(values))
    }

    pub fn modes(&self) -> usize {
        match self {
            Self::Scalar { modes, .. } => *modes,
            Self::Matrix(m) => m.nrows(),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Self::Scalar { f, modes } => CMatrix::identity(*modes, *modes) * C64::new(*f, 0.0),
            Self::Matrix(m) => m.clone(),
        }
    }

    /// Eigen-decomposition `μ = V diag(m) V†`, eigenvalues clamped at zero.
    ///
    /// Fails if `μ` violates Hermiticity or positivity.
    pub fn eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        match self {
            Self::Scalar { f, modes } => {
                check_scalar(*f)?;
                Ok((vec![*f; *modes], CMatrix::identity(*modes, *modes)))
            }
            Self::Matrix(m) => {
                check_covariance(m)?;
                let eig = SymmetricEigen::new(hermitize(m));
                let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
                let vals = eig
                    .eigenvalues
                    .iter()
                    .map(|&v| clamp_small_negative(v, max))
                    .collect();
                Ok((vals, eig.eigenvectors))
            }
        }
    }
}

/// Named analytic transmission-eigenvalue ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// One weakly transmitting barrier: every channel has `T = Γ`.
    #[serde(alias = "SingleBarrier")]
    SingleBarrier,
    /// Two identical barriers in series: bimodal `ρ(T) ∝ T^{-3/2}(1 − T)^{-1/2}`.
    #[serde(alias = "DoubleBarrier")]
    DoubleBarrier,
    /// Disordered waveguide: bimodal `ρ(T) ∝ T^{-1}(1 − T)^{-1/2}`.
    #[serde(alias = "Diffusive")]
    Diffusive,
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SingleBarrier => "single-barrier",
            Self::DoubleBarrier => "double-barrier",
            Self::Diffusive => "diffusive",
        })
    }
}

/// The scatterer between source and detector.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmissionSpec {
    /// Explicit `M × N` transmission matrix (`a_out = t a`).
    Matrix(CMatrix),
    /// Transmission eigenvalues `T_n` of `t† t`, taken diagonal in the basis
    /// in which a matrix `μ` is expressed (`t = diag(√T_n)`).
    Eigenvalues(Vec<f64>),
    /// Named large-`N` ensemble; must be resolved by [`crate::ensembles`].
    Ensemble {
        ensemble: Ensemble,
        modes: usize,
        gamma: f64,
    },
}

impl TransmissionSpec {
    /// Number of incoming modes the scatterer accepts.
    pub fn input_modes(&self) -> usize {
        match self {
            Self::Matrix(t) => t.ncols(),
            Self::Eigenvalues(v) => v.len(),
            Self::Ensemble { modes, .. } => *modes,
        }
    }

    /// Explicit matrix realization. Eigenvalue lists become `diag(√T_n)`.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            Self::Matrix(t) => Ok(t.clone()),
            Self::Eigenvalues(ts) => {
                check_transmissions(ts)?;
                let n = ts.len();
                Ok(CMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        C64::new(ts[i].sqrt(), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }))
            }
            Self::Ensemble { .. } => Err(Error::UnresolvedEnsemble),
        }
    }
}

/// One frequency bin of a broadband detection profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    /// Number of coherence cells in this bin (`ν_j`).
    pub weight: f64,
    /// Occupation number in this bin (`f_j`).
    pub occupation: f64,
}

/// Counting window: `ν = t·δω/2π` coherence cells, optionally resolved in
/// frequency for a broadband detector.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingWindow {
    pub cells: f64,
    pub profile: Option<Vec<ProfileBin>>,
}

impl CountingWindow {
    pub fn new(cells: f64) -> Self {
        Self {
            cells,
            profile: None,
        }
    }

    pub fn with_profile(cells: f64, profile: Vec<ProfileBin>) -> Self {
        Self {
            cells,
            profile: Some(profile),
        }
    }
}

/// Eigenvalues `λ_k ≥ 0` of `t μ t†`, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
}

impl SpectralData {
    /// Builds a spectrum from raw eigenvalues. Values in `[−1e−10·max, 0)`
    /// are clamped to zero; anything more negative or non-finite is rejected.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
        }
        let max = eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let min = eigenvalues.iter().cloned().fold(0.0_f64, f64::min);
        if min < -STRUCTURAL_TOL * max.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        for v in &mut eigenvalues {
            *v = v.max(0.0);
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `Σ_k λ_k^p`, i.e. `Tr (μ t† t)^p`.
    pub fn power_sum(&self, p: i32) -> f64 {
        self.eigenvalues.iter().map(|v| v.powi(p)).sum()
    }

    /// True when every eigenvalue is zero (vacuum at the detector).
    pub fn is_zero(&self) -> bool {
        self.max() == 0.0
    }
}

/// Conditions under which an analytic approximation is being used outside
/// its stated regime. These never abort a computation on their own; the CLI
/// escalates them under `--strict`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeWarning {
    /// Bimodal double-barrier density needs `N ≫ 1/Γ`.
    SmallChannelNumber { modes: usize, gamma: f64 },
    /// Universal Fano factor for non-scalar `μ` needs `1 ≪ ΓN ≪ N_c`.
    UniversalityWindow {
        gamma_n: f64,
        coherent_modes: f64,
    },
    /// Large-`f` count distribution needs `1 ≪ f ≪ n̄`.
    KDistributionRegime { f: f64, mean: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SmallChannelNumber { modes, gamma } => write!(
                f,
                "bimodal density requires N ≫ 1/Γ (N = {modes}, 1/Γ = {:.3})",
                1.0 / gamma
            ),
            Self::UniversalityWindow {
                gamma_n,
                coherent_modes,
            } => write!(
                f,
                "universal Fano factor requires 1 ≪ ΓN ≪ N_c (ΓN = {gamma_n:.3}, N_c = {coherent_modes:.3})"
            ),
            Self::KDistributionRegime { f: occ, mean } => write!(
                f,
                "large-f count distribution requires 1 ≪ f ≪ n̄ (f = {occ}, n̄ = {mean})"
            ),
        }
    }
}

/// Factor used to read "a ≪ b" as `10·a ≤ b`.
pub const MUCH_LESS: f64 = 10.0;

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NonFinite { location: &'static str },
    NegativeOccupation { f: f64 },
    ZeroModes { location: &'static str },
    NonSquareCovariance { rows: usize, cols: usize },
    NotHermitian { deviation: f64 },
    NotPsd { min_eigenvalue: f64 },
    NotPassive { max_singular_value: f64 },
    TransmissionOutOfRange { index: usize, value: f64 },
    GammaOutOfRange { gamma: f64 },
    DimensionMismatch { covariance: usize, scatterer: usize },
    NonPositiveCells { cells: f64 },
    ProfileWeightMismatch { sum: f64, cells: f64 },
    InvalidProfileBin { index: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { location } => write!(f, "non-finite value in {location}"),
            Self::NegativeOccupation { f: v } => write!(f, "occupation f = {v} is negative"),
            Self::ZeroModes { location } => write!(f, "{location} has zero modes"),
            Self::NonSquareCovariance { rows, cols } => {
                write!(f, "covariance is {rows}×{cols}, not square")
            }
            Self::NotHermitian { deviation } => {
                write!(f, "NotHermitian: max |μ − μ†| = {deviation:e}")
            }
            Self::NotPsd { min_eigenvalue } => {
                write!(f, "NotPSD: min eigenvalue of μ is {min_eigenvalue:e}")
            }
            Self::NotPassive { max_singular_value } => {
                write!(f, "NotPassive: largest singular value of t is {max_singular_value}")
            }
            Self::TransmissionOutOfRange { index, value } => {
                write!(f, "T[{index}] = {value} outside [0, 1]")
            }
            Self::GammaOutOfRange { gamma } => write!(f, "Γ = {gamma} outside (0, 1]"),
            Self::DimensionMismatch {
                covariance,
                scatterer,
            } => write!(
                f,
                "DimensionMismatch: μ has {covariance} modes, t accepts {scatterer}"
            ),
            Self::NonPositiveCells { cells } => write!(f, "ν = {cells} must be positive"),
            Self::ProfileWeightMismatch { sum, cells } => {
                write!(f, "profile weights sum to {sum}, window has ν = {cells}")
            }
            Self::InvalidProfileBin { index } => {
                write!(f, "profile bin {index} needs weight > 0 and occupation ≥ 0")
            }
        }
    }
}

/// All invariant violations of an input triple. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks every invariant of the source, scatterer and counting window.
pub fn validate(
    mu: &ModeCovariance,
    t: &TransmissionSpec,
    window: &CountingWindow,
) -> ValidationReport {
    let mut issues = Vec::new();

    match mu {
        ModeCovariance::Scalar { f, modes } => {
            if !f.is_finite() {
                issues.push(ValidationIssue::NonFinite { location: "μ" });
            } else if *f < 0.0 {
                issues.push(ValidationIssue::NegativeOccupation { f: *f });
            }
            if *modes == 0 {
                issues.push(ValidationIssue::ZeroModes { location: "μ" });
            }
        }
        ModeCovariance::Matrix(m) => {
            if m.nrows() != m.ncols() {
                issues.push(ValidationIssue::NonSquareCovariance {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            } else if m.nrows() == 0 {
                issues.push(ValidationIssue::ZeroModes { location: "μ" });
            } else if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                issues.push(ValidationIssue::NonFinite { location: "μ" });
            } else {
                match covariance_issue(m) {
                    Some(Error::NotHermitian { deviation }) => {
                        issues.push(ValidationIssue::NotHermitian { deviation })
                    }
                    Some(Error::NotPsd { min_eigenvalue }) => {
                        issues.push(ValidationIssue::NotPsd { min_eigenvalue })
                    }
                    _ => {}
                }
            }
        }
    }

    match t {
        TransmissionSpec::Matrix(tm) => {
            if tm.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                issues.push(ValidationIssue::NonFinite { location: "t" });
            } else if let Some(s) = max_singular_value(tm) {
                if s > 1.0 + STRUCTURAL_TOL {
                    issues.push(ValidationIssue::NotPassive {
                        max_singular_value: s,
                    });
                }
            }
        }
        TransmissionSpec::Eigenvalues(ts) => {
            for (index, &value) in ts.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    issues.push(ValidationIssue::TransmissionOutOfRange { index, value });
                }
            }
        }
        TransmissionSpec::Ensemble { modes, gamma, .. } => {
            if *modes == 0 {
                issues.push(ValidationIssue::ZeroModes { location: "t" });
            }
            if !(*gamma > 0.0 && *gamma <= 1.0) {
                issues.push(ValidationIssue::GammaOutOfRange { gamma: *gamma });
            }
        }
    }

    let (nm, nt) = (mu.modes(), t.input_modes());
    if nm != nt {
        issues.push(ValidationIssue::DimensionMismatch {
            covariance: nm,
            scatterer: nt,
        });
    }

    if !(window.cells > 0.0 && window.cells.is_finite()) {
        issues.push(ValidationIssue::NonPositiveCells {
            cells: window.cells,
        });
    }
    if let Some(profile) = &window.profile {
        for (index, bin) in profile.iter().enumerate() {
            let ok = bin.weight > 0.0
                && bin.weight.is_finite()
                && bin.occupation >= 0.0
                && bin.occupation.is_finite();
            if !ok {
                issues.push(ValidationIssue::InvalidProfileBin { index });
            }
        }
        let sum: f64 = profile.iter().map(|b| b.weight).sum();
        // Summation error of many bins grows like len·ε.
        let tol = (1e-12_f64).max(profile.len() as f64 * f64::EPSILON);
        if (sum - window.cells).abs() > tol * window.cells.abs() {
            issues.push(ValidationIssue::ProfileWeightMismatch {
                sum,
                cells: window.cells,
            });
        }
    }

    ValidationReport { issues }
}

/// Eigenvalues of `t μ t†`, sorted descending.
///
/// For a scalar source and an eigenvalue list this is exactly `{f · T_n}`.
pub fn reduce_to_spectrum(mu: &ModeCovariance, t: &TransmissionSpec) -> Result<SpectralData> {
    let n = mu.modes();
    if let TransmissionSpec::Ensemble { .. } = t {
        return Err(Error::UnresolvedEnsemble);
    }
    if t.input_modes() != n {
        return Err(Error::DimensionMismatch {
            what: "scatterer input modes",
            expected: n,
            found: t.input_modes(),
        });
    }

    match (mu, t) {
        (ModeCovariance::Scalar { f, .. }, TransmissionSpec::Eigenvalues(ts)) => {
            check_scalar(*f)?;
            check_transmissions(ts)?;
            SpectralData::new(ts.iter().map(|x| f * x).collect())
        }
        (ModeCovariance::Scalar { f, .. }, TransmissionSpec::Matrix(tm)) => {
            check_scalar(*f)?;
            check_passive(tm)?;
            let ttd = tm * tm.adjoint();
            let vals = hermitian_eigenvalues(&ttd);
            clamp_spectrum(vals.into_iter().map(|v| f * v).collect())
        }
        (ModeCovariance::Matrix(m), TransmissionSpec::Eigenvalues(ts)) => {
            check_covariance(m)?;
            check_transmissions(ts)?;
            let d: Vec<f64> = ts.iter().map(|x| x.sqrt()).collect();
            let congruent = CMatrix::from_fn(n, n, |i, j| m[(i, j)] * (d[i] * d[j]));
            clamp_spectrum(hermitian_eigenvalues(&congruent))
        }
        (ModeCovariance::Matrix(m), TransmissionSpec::Matrix(tm)) => {
            check_covariance(m)?;
            check_passive(tm)?;
            let congruent = tm * m * tm.adjoint();
            clamp_spectrum(hermitian_eigenvalues(&congruent))
        }
        (_, TransmissionSpec::Ensemble { .. }) => unreachable!("rejected above"),
    }
}

fn clamp_spectrum(vals: Vec<f64>) -> Result<SpectralData> {
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    SpectralData::new(vals.into_iter().map(|v| clamp_small_negative(v, max)).collect())
}

fn clamp_small_negative(v: f64, max: f64) -> f64 {
    if v < 0.0 && v >= -STRUCTURAL_TOL * max.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        v
    }
}

/// `(A + A†)/2`.
pub(crate) fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of a (numerically) Hermitian matrix, unsorted.
pub(crate) fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect()
}

fn max_singular_value(t: &CMatrix) -> Option<f64> {
    if t.is_empty() {
        return None;
    }
    // σ_max² is the largest eigenvalue of the smaller Gram matrix.
    let gram: CMatrix = if t.nrows() <= t.ncols() {
        t * t.adjoint()
    } else {
        t.adjoint() * t
    };
    let top = hermitian_eigenvalues(&gram)
        .into_iter()
        .fold(0.0_f64, f64::max);
    Some(top.sqrt())
}

fn check_scalar(f: f64) -> Result<()> {
    if f.is_finite() && f >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "occupation f = {f} must be finite and ≥ 0"
        )))
    }
}

fn check_transmissions(ts: &[f64]) -> Result<()> {
    match ts.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(Error::TransmissionOutOfRange {
            index,
            value: ts[index],
        }),
        None => Ok(()),
    }
}

fn check_passive(t: &CMatrix) -> Result<()> {
    match max_singular_value(t) {
        Some(s) if s > 1.0 + STRUCTURAL_TOL || !s.is_finite() => Err(Error::NotPassive {
            max_singular_value: s,
        }),
        _ => Ok(()),
    }
}

fn check_covariance(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "covariance columns",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    match covariance_issue(m) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn covariance_issue(m: &CMatrix) -> Option<Error> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let deviation = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, f64::max);
    if deviation > STRUCTURAL_TOL * scale {
        return Some(Error::NotHermitian { deviation });
    }
    let vals = hermitian_eigenvalues(m);
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -STRUCTURAL_TOL * max.max(f64::MIN_POSITIVE) {
        return Some(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    None
}

/// Real-valued diagonal matrix, handy for tests and examples.
pub fn real_diagonal(values: &[f64]) -> CMatrix {
    let n = values.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rank_one(v: &[C64], trace: f64) -> CMatrix {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let col = nalgebra::DVector::from_column_slice(v);
        &col * col.adjoint() * C64::new(trace / norm2, 0.0)
    }

    #[test]
    fn scalar_scales_eigenvalues() {
        let spec = reduce_to_spectrum(
            &ModeCovariance::scalar(2.0, 3),
            &TransmissionSpec::Eigenvalues(vec![1.0, 0.5, 0.0]),
        )
        .unwrap();
        assert_eq!(spec.eigenvalues(), &[2.0, 1.0, 0.0]);
    }

    #[test]
    fn identity_scatterer_keeps_covariance_spectrum() {
        let spec = reduce_to_spectrum(
            &ModeCovariance::diagonal(&[4.0, 0.0]),
            &TransmissionSpec::Matrix(CMatrix::identity(2, 2)),
        )
        .unwrap();
        assert!((spec.eigenvalues()[0] - 4.0).abs() < 1e-14);
        assert!(spec.eigenvalues()[1].abs() < 1e-14);
    }

    #[test]
    fn rank_one_through_unitary_keeps_rank_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mu = rank_one(&[C64::new(0.3, -1.2), C64::new(0.8, 0.4)], 3.0);
        let u = sample_haar_unitary(2, &mut rng);
        let spec = reduce_to_spectrum(
            &ModeCovariance::Matrix(mu.clone()),
            &TransmissionSpec::Matrix(u.clone()),
        )
        .unwrap();
        // Oracle: dense eigensolve of t μ t† computed independently.
        let direct = &u * &mu * u.adjoint();
        let tr = direct.trace().re;
        assert!((tr - 3.0).abs() < 1e-12);
        assert!((spec.eigenvalues()[0] - 3.0).abs() < 1e-12);
        assert!(spec.eigenvalues()[1].abs() < 1e-12);
    }

    #[test]
    fn ensemble_must_be_resolved() {
        let err = reduce_to_spectrum(
            &ModeCovariance::scalar(1.0, 4),
            &TransmissionSpec::Ensemble {
                ensemble: Ensemble::DoubleBarrier,
                modes: 4,
                gamma: 0.1,
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::UnresolvedEnsemble);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = reduce_to_spectrum(
            &ModeCovariance::scalar(1.0, 3),
            &TransmissionSpec::Eigenvalues(vec![0.5, 0.5]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn non_hermitian_and_non_psd_are_rejected() {
        let mut m = real_diagonal(&[1.0, 1.0]);
        m[(0, 1)] = C64::new(0.5, 0.0);
        let t = TransmissionSpec::Matrix(CMatrix::identity(2, 2));
        assert!(matches!(
            reduce_to_spectrum(&ModeCovariance::Matrix(m), &t),
            Err(Error::NotHermitian { .. })
        ));
        let m = real_diagonal(&[1.0, -0.1]);
        assert!(matches!(
            reduce_to_spectrum(&ModeCovariance::Matrix(m), &t),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn valid_inputs_give_empty_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = sample_haar_unitary(3, &mut rng);
        let report = validate(
            &ModeCovariance::diagonal(&[1.0, 2.0, 0.5]),
            &TransmissionSpec::Matrix(u),
            &CountingWindow::new(10.0),
        );
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn report_lists_not_psd() {
        let report = validate(
            &ModeCovariance::diagonal(&[1.0, -0.1]),
            &TransmissionSpec::Eigenvalues(vec![0.5, 0.5]),
            &CountingWindow::new(1.0),
        );
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NotPsd { .. })));
    }

    #[test]
    fn report_lists_not_passive() {
        let t = real_diagonal(&[1.5, 0.5]);
        let report = validate(
            &ModeCovariance::scalar(1.0, 2),
            &TransmissionSpec::Matrix(t),
            &CountingWindow::new(1.0),
        );
        assert_eq!(
            report.issues,
            vec![ValidationIssue::NotPassive {
                max_singular_value: 1.5
            }]
        );
    }

    #[test]
    fn report_collects_several_problems() {
        let report = validate(
            &ModeCovariance::scalar(-1.0, 2),
            &TransmissionSpec::Eigenvalues(vec![1.2, 0.5, 0.1]),
            &CountingWindow::with_profile(
                2.0,
                vec![ProfileBin {
                    weight: 1.0,
                    occupation: 1.0,
                }],
            ),
        );
        assert_eq!(report.issues.len(), 4, "{report}");
    }

    #[test]
    fn small_negative_eigenvalues_are_clamped() {
        let spec = SpectralData::new(vec![1.0, -1e-13, 0.5]).unwrap();
        assert_eq!(spec.eigenvalues(), &[1.0, 0.5, 0.0]);
        assert!(SpectralData::new(vec![1.0, -1e-3]).is_err());
    }
}
