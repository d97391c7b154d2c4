//! Transmission-eigenvalue ensembles, Haar-distributed eigenvectors, and the
//! Haar-averaged Fano factor for a non-scalar source covariance.
//!
//! Densities are the large-`N` laws
//!
//! ```text
//! double barrier: ρ(T) = (NΓ/2π) T^{-3/2} (1 − T)^{-1/2}
//! diffusive:      ρ(T) = (NΓ/2)  T^{-1}   (1 − T)^{-1/2}
//! single barrier: ρ(T) = N δ(T − Γ)
//! ```
//!
//! Both bimodal laws carry infinite channel weight at `T → 0` (closed
//! channels). Moments of order `p ≥ 1` are finite and are what the counting
//! statistics use. For the diffusive law `Γ` plays the role of `l/L`, so the
//! mean transmission per channel is `Γ`; only the ratio `⟨T²⟩/⟨T⟩ = 2/3`
//! matters for the Fano factor.
//!
//! # Sampling
//!
//! To draw `N` eigenvalues we restrict the density to `[T_min, 1]`, with
//! `T_min` chosen so that the retained weight is exactly `N`, and invert the
//! resulting CDF in closed form. The substitution `T = sin²φ` gives
//!
//! ```text
//! ∫_T^1 ρ_db = (NΓ/π) √((1 − T)/T)      ⇒ T_min = 1 / (1 + π²/Γ²)
//! ∫_T^1 ρ_d  = NΓ artanh √(1 − T)        ⇒ T_min = sech²(1/Γ)
//! ```
//!
//! The truncation drops the weight below `T_min`. Its effect on the first
//! moment is a relative `≈ 2Γ/π²` for the double barrier (see
//! [`EigenvalueDensity::truncated_moment`]), negligible for `Γ ≪ 1`.
//!
//! Whether a double-barrier structure without disorder mixes modes strongly
//! enough for Haar-distributed eigenvectors is not settled here; the Haar
//! formulas assume it.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::genfn::{CumulantSummary, Statistics};
use crate::model::{Ensemble, RegimeWarning, TransmissionSpec, MUCH_LESS};
use crate::quad::tanh_sinh;
use crate::stats::{block_ranges, jackknife_error, JACKKNIFE_BLOCKS};
use crate::{CMatrix, Error, Result, C64};

/// Large-`N` transmission-eigenvalue density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueDensity {
    ensemble: Ensemble,
    modes: usize,
    gamma: f64,
}

impl EigenvalueDensity {
    pub fn new(ensemble: Ensemble, modes: usize, gamma: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("ensemble needs N ≥ 1".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier transparency Γ = {gamma} outside (0, 1]"
            )));
        }
        Ok(Self {
            ensemble,
            modes,
            gamma,
        })
    }

    pub fn from_spec(spec: &TransmissionSpec) -> Option<Result<Self>> {
        match spec {
            TransmissionSpec::Ensemble {
                ensemble,
                modes,
                gamma,
            } => Some(Self::new(*ensemble, *modes, *gamma)),
            _ => None,
        }
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn weight(&self) -> f64 {
        self.modes as f64 * self.gamma
    }

    /// `ρ(T)` for the continuous laws; `None` for the point mass.
    pub fn density(&self, t: f64) -> Option<f64> {
        self.density_split(t, 1.0 - t)
    }

    /// `ρ` evaluated from `T` and `1 − T` supplied separately.
    fn density_split(&self, t: f64, one_minus_t: f64) -> Option<f64> {
        match self.ensemble {
            Ensemble::SingleBarrier => None,
            Ensemble::DoubleBarrier => {
                Some(self.weight() / (2.0 * PI) / (t * t.sqrt() * one_minus_t.sqrt()))
            }
            Ensemble::Diffusive => Some(0.5 * self.weight() / (t * one_minus_t.sqrt())),
        }
    }

    /// `∫ T^p ρ(T) dT` in closed form, `1 ≤ p ≤ 4`.
    pub fn moment(&self, p: u32) -> Result<f64> {
        if !(1..=4).contains(&p) {
            return Err(Error::UnsupportedMoment(p));
        }
        let w = self.weight();
        Ok(match self.ensemble {
            Ensemble::SingleBarrier => self.modes as f64 * self.gamma.powi(p as i32),
            Ensemble::DoubleBarrier => {
                // (NΓ/2π) B(p − ½, ½) = (NΓ/2) C(2p−2, p−1) / 4^{p−1}
                let k = p - 1;
                let central = (1..=k).fold(1.0, |acc, i| acc * (k + i) as f64 / i as f64);
                0.5 * w * central / 4f64.powi(k as i32)
            }
            Ensemble::Diffusive => {
                // (NΓ/2) B(p, ½), with B(1, ½) = 2 and B(p+1, ½) = B(p, ½) p / (p + ½)
                let beta = (1..p).fold(2.0, |acc, k| acc * k as f64 / (k as f64 + 0.5));
                0.5 * w * beta
            }
        })
    }

    /// `∫ T^p ρ(T) dT` by adaptive quadrature in the original variable.
    pub fn moment_by_quadrature(&self, p: u32, tol: f64) -> f64 {
        match self.ensemble {
            Ensemble::SingleBarrier => self.modes as f64 * self.gamma.powi(p as i32),
            _ => {
                tanh_sinh(
                    |_, t, one_minus_t| {
                        t.powi(p as i32) * self.density_split(t, one_minus_t).unwrap_or(0.0)
                    },
                    0.0,
                    1.0,
                    tol,
                )
                .value
            }
        }
    }

    /// Lower end of the sampling support; `Γ` for the point mass.
    pub fn lower_cutoff(&self) -> f64 {
        match self.ensemble {
            Ensemble::SingleBarrier => self.gamma,
            Ensemble::DoubleBarrier => 1.0 / (1.0 + (PI / self.gamma).powi(2)),
            Ensemble::Diffusive => {
                let c = (1.0 / self.gamma).cosh();
                1.0 / (c * c)
            }
        }
    }

    /// Fraction of sampled eigenvalues above `t`.
    pub fn survival(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self.ensemble {
            Ensemble::SingleBarrier => {
                if t < self.gamma {
                    1.0
                } else {
                    0.0
                }
            }
            _ if t <= self.lower_cutoff() => 1.0,
            Ensemble::DoubleBarrier => self.gamma / PI * ((1.0 - t) / t).sqrt(),
            Ensemble::Diffusive => self.gamma * (1.0 - t).sqrt().atanh(),
        }
    }

    /// CDF of the normalized sampling law on `[T_min, 1]`.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Inverse of [`Self::cdf`].
    pub fn quantile(&self, u: f64) -> f64 {
        let tail = 1.0 - u.clamp(0.0, 1.0);
        match self.ensemble {
            Ensemble::SingleBarrier => self.gamma,
            Ensemble::DoubleBarrier => {
                let r = tail * PI / self.gamma;
                1.0 / (1.0 + r * r)
            }
            Ensemble::Diffusive => {
                let c = (tail / self.gamma).cosh();
                1.0 / (c * c)
            }
        }
    }

    /// `N · E[T^p]` under the truncated sampling law, i.e. the moment that
    /// a large sample actually estimates.
    pub fn truncated_moment(&self, p: u32, tol: f64) -> f64 {
        let lo = self.lower_cutoff();
        match self.ensemble {
            Ensemble::SingleBarrier => self.modes as f64 * self.gamma.powi(p as i32),
            _ => {
                tanh_sinh(
                    |t, _, one_minus_t| {
                        t.powi(p as i32) * self.density_split(t, one_minus_t).unwrap_or(0.0)
                    },
                    lo,
                    1.0,
                    tol,
                )
                .value
            }
        }
    }

    /// Conditions under which the large-`N` density is not trustworthy.
    pub fn regime_warnings(&self) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        if self.ensemble != Ensemble::SingleBarrier
            && (self.modes as f64) * self.gamma < MUCH_LESS
        {
            out.push(RegimeWarning::SmallChannelNumber {
                modes: self.modes,
                gamma: self.gamma,
            });
        }
        out
    }

    /// Cumulants of the count in the large-`N` limit, for scalar occupation
    /// `f` (ignored for Fermi statistics) over `cells` coherence cells.
    pub fn cumulants(&self, occupation: f64, cells: f64, statistics: Statistics) -> CumulantSummary {
        let m1 = self.moment(1).expect("p = 1 supported");
        let m2 = self.moment(2).expect("p = 2 supported");
        let m3 = self.moment(3).expect("p = 3 supported");
        match statistics {
            Statistics::Bose => {
                let f = occupation;
                CumulantSummary::from_cumulants(
                    cells * f * m1,
                    cells * (f * m1 + f * f * m2),
                    cells * (f * m1 + 3.0 * f * f * m2 + 2.0 * f.powi(3) * m3),
                )
            }
            Statistics::Fermi => CumulantSummary::from_cumulants(
                cells * m1,
                cells * (m1 - m2),
                cells * (m1 - 3.0 * m2 + 2.0 * m3),
            ),
        }
    }

    /// `−ν ∫ ρ(T) ln[1 − (e^ξ − 1) f T] dT` by quadrature: the Bose generating
    /// function of a scalar source through this ensemble.
    pub fn cgf_by_quadrature(&self, occupation: f64, cells: f64, xi: f64, tol: f64) -> Result<f64> {
        let w = xi.exp_m1() * occupation;
        if w >= 1.0 {
            return Err(Error::OutOfDomain {
                xi,
                xi_max: (1.0 / occupation).ln_1p(),
            });
        }
        let value = match self.ensemble {
            Ensemble::SingleBarrier => -(self.modes as f64) * (-w * self.gamma).ln_1p(),
            _ => {
                -tanh_sinh(
                    |_, t, one_minus_t| {
                        (-w * t).ln_1p() * self.density_split(t, one_minus_t).unwrap_or(0.0)
                    },
                    0.0,
                    1.0,
                    tol,
                )
                .value
            }
        };
        Ok(cells * value)
    }
}

/// `N` independent transmission eigenvalues drawn from the density by inverse
/// CDF. The double-barrier and diffusive laws are restricted to `[T_min, 1]`
/// as described in the module docs.
pub fn sample_eigenvalues<R: Rng + ?Sized>(d: &EigenvalueDensity, rng: &mut R) -> Vec<f64> {
    for w in d.regime_warnings() {
        log::warn!("{w}");
    }
    match d.ensemble {
        Ensemble::SingleBarrier => vec![d.gamma; d.modes],
        _ => (0..d.modes).map(|_| d.quantile(rng.random::<f64>())).collect(),
    }
}

/// Haar-distributed `N × N` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag R` divided out.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 {
            d / norm
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A transmission matrix with eigenvalues `T_n` and Haar-distributed
/// eigenvectors: `t = diag(√T) U`, so that `t†t = U† diag(T) U`.
pub fn transmission_with_haar_eigenvectors<R: Rng + ?Sized>(
    transmissions: &[f64],
    rng: &mut R,
) -> CMatrix {
    let n = transmissions.len();
    let u = sample_haar_unitary(n, rng);
    let mut t = u;
    for (i, &tau) in transmissions.iter().enumerate() {
        let s = tau.sqrt();
        for j in 0..n {
            t[(i, j)] *= s;
        }
    }
    t
}

/// Spectral moments `⟨x⟩ = N⁻¹ Tr x`, `⟨x²⟩ = N⁻¹ Tr x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub second: f64,
}

impl MomentSet {
    pub fn new(mean: f64, second: f64) -> Self {
        Self { mean, second }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        Self {
            mean: values.iter().sum::<f64>() / n,
            second: values.iter().map(|v| v * v).sum::<f64>() / n,
        }
    }

    /// Moments of `τ` per channel in the large-`N` limit.
    pub fn from_density(d: &EigenvalueDensity) -> Self {
        let n = d.modes as f64;
        Self {
            mean: d.moment(1).expect("supported") / n,
            second: d.moment(2).expect("supported") / n,
        }
    }

    /// `⟨⟨x²⟩⟩ = ⟨x²⟩ − ⟨x⟩²`.
    pub fn cumulant(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

/// `κ = Γ ⟨⟨μ²⟩⟩ / ⟨μ⟩²`, the non-scalar correction for two barriers.
pub fn kappa(mu: &MomentSet, gamma: f64) -> f64 {
    gamma * mu.cumulant() / (mu.mean * mu.mean)
}

/// `κ` for `N_c` equal nonzero eigenvalues out of `N`: `Γ (N/N_c − 1)`.
pub fn kappa_coherent_modes(modes: usize, coherent_modes: usize, gamma: f64) -> f64 {
    gamma * (modes as f64 / coherent_modes as f64 - 1.0)
}

/// Haar-averaged Fano factor for strong intermode mixing,
///
/// ```text
/// F = 1 + ⟨μ⟩⟨τ⟩ + ⟨μ⟩⟨⟨τ²⟩⟩/⟨τ⟩ + ⟨τ⟩⟨⟨μ²⟩⟩/⟨μ⟩
/// ```
pub fn fano_haar(mu: &MomentSet, tau: &MomentSet) -> Result<f64> {
    if !(mu.mean > 0.0 && tau.mean > 0.0) {
        return Err(Error::ZeroMoment);
    }
    Ok(1.0
        + mu.mean * tau.mean
        + mu.mean * tau.cumulant() / tau.mean
        + tau.mean * mu.cumulant() / mu.mean)
}

/// Double-barrier specialization of [`fano_haar`]: `1 + ½⟨μ⟩(1 + κ)`.
pub fn fano_haar_double_barrier(mu: &MomentSet, gamma: f64) -> Result<f64> {
    if mu.mean <= 0.0 {
        return Err(Error::ZeroMoment);
    }
    Ok(1.0 + 0.5 * mu.mean * (1.0 + kappa(mu, gamma)))
}

/// Warns unless `1 ≪ ΓN ≪ N_c`.
pub fn universality_warning(
    modes: usize,
    coherent_modes: f64,
    gamma: f64,
) -> Option<RegimeWarning> {
    let gamma_n = gamma * modes as f64;
    if gamma_n >= MUCH_LESS && MUCH_LESS * gamma_n <= coherent_modes {
        None
    } else {
        Some(RegimeWarning::UniversalityWindow {
            gamma_n,
            coherent_modes,
        })
    }
}

/// Monte Carlo estimate of the Haar-averaged Fano factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarEstimate {
    /// `1 + E[Tr(μU†τU)²] / E[Tr(μU†τU)]`.
    pub fano: f64,
    /// Block-jackknife standard error of `fano`.
    pub std_error: f64,
    pub samples: usize,
}

/// Samples per independent random stream.
const HAAR_CHUNK: usize = 64;

/// Averages numerator and denominator of the Fano functional separately over
/// `samples` Haar unitaries, for diagonal `μ` and `τ`. Deterministic in
/// `seed` regardless of thread count.
pub fn haar_average_fano(mu: &[f64], tau: &[f64], samples: usize, seed: u64) -> Result<HaarEstimate> {
    let n = mu.len();
    if tau.len() != n {
        return Err(Error::DimensionMismatch {
            what: "τ spectrum",
            expected: n,
            found: tau.len(),
        });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two Haar samples".into()));
    }
    let mu_v = DVector::from_column_slice(mu);
    let chunks = samples.div_ceil(HAAR_CHUNK);
    let pairs: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = HAAR_CHUNK.min(samples - c * HAAR_CHUNK);
            let mu_v = &mu_v;
            (0..count)
                .map(|_| {
                    let u = sample_haar_unitary(n, &mut rng);
                    let mut tu = u.clone();
                    for (i, &t) in tau.iter().enumerate() {
                        for j in 0..n {
                            tu[(i, j)] *= t;
                        }
                    }
                    let a = u.adjoint() * tu;
                    let mut den = 0.0;
                    let mut num = 0.0;
                    for i in 0..n {
                        den += mu_v[i] * a[(i, i)].re;
                        for k in 0..n {
                            num += mu_v[i] * mu_v[k] * a[(i, k)].norm_sqr();
                        }
                    }
                    (num, den)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let ratio = |num: f64, den: f64| 1.0 + num / den;
    let (tn, td) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    if td <= 0.0 {
        return Err(Error::ZeroMoment);
    }
    let loo: Vec<f64> = block_ranges(pairs.len(), JACKKNIFE_BLOCKS)
        .into_iter()
        .map(|r| {
            let (bn, bd) = pairs[r]
                .iter()
                .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            ratio(tn - bn, td - bd)
        })
        .collect();
    Ok(HaarEstimate {
        fano: ratio(tn, td),
        std_error: jackknife_error(&loo),
        samples,
    })
}
