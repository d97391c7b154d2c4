//! Cumulant generating function `F(ξ) = ln Σ_n e^{ξn} P(n)` and its cumulants.
//!
//! For chaotic light the generating function is a log-determinant, which in
//! the eigenbasis of `t μ t†` becomes
//!
//! ```text
//! Bose:  F(ξ) = −ν Σ_k ln[1 − (e^ξ − 1) λ_k]
//! Fermi: F(ξ) = +ν Σ_k ln[1 + (e^ξ − 1) T_k]
//! ```
//!
//! The Fermi form (zero-temperature electrons, `λ_k` read as transmission
//! eigenvalues and `ν` as `teV/2πℏ`) is kept for comparison only.
//!
//! The Bose form has a branch point at `ξ_max = ln(1 + 1/λ_max)`; on the
//! imaginary axis it is always finite.

use crate::model::{ProfileBin, SpectralData};
use crate::{Error, Result, C64};

/// Particle statistics of the counted quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Bose,
    Fermi,
}

/// Any cumulant generating function of a distribution on the nonnegative
/// integers that the inversion routines in [`crate::pmf`] can consume.
pub trait CountingCgf: Sync {
    /// Supremum of the real convergence domain (`+∞` if entire).
    fn xi_max(&self) -> f64;

    /// `F(z)` for `Re z < ξ_max`, on the branch continuous with `F(0) = 0`.
    fn eval_complex(&self, z: C64) -> C64;

    /// `[F, F′, F″, F‴]` at real `ξ < ξ_max`.
    fn derivatives(&self, xi: f64) -> [f64; 4];

    /// `lim_{ξ→−∞} F(ξ) = ln P(0)`.
    fn log_vacuum_probability(&self) -> f64;

    /// Largest count with nonzero probability, if finite.
    fn support_max(&self) -> Option<f64> {
        None
    }

    /// True when the distribution is a point mass at zero.
    fn is_degenerate(&self) -> bool;

    /// `F(ξ)` on the real axis.
    fn eval_real(&self, xi: f64) -> Result<f64> {
        let xi_max = self.xi_max();
        if xi >= xi_max || xi.is_nan() {
            return Err(Error::OutOfDomain { xi, xi_max });
        }
        if xi == 0.0 {
            return Ok(0.0);
        }
        Ok(self.derivatives(xi)[0])
    }

    /// `F(iθ)`; `exp F(iθ)` is the characteristic function of the count.
    fn eval_imag(&self, theta: f64) -> C64 {
        self.eval_complex(C64::new(0.0, theta))
    }

    /// Mean, variance and third cumulant from the derivatives at `ξ = 0`.
    fn cumulants(&self) -> CumulantSummary {
        let [_, c1, c2, c3] = self.derivatives(0.0);
        CumulantSummary::from_cumulants(c1, c2, c3)
    }
}

/// Low-order cumulants of the count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSummary {
    pub mean: f64,
    pub variance: f64,
    /// `Var n / n̄`, defined as 1 when the mean vanishes.
    pub fano: f64,
    /// Third cumulant.
    pub third: f64,
}

impl CumulantSummary {
    pub fn from_cumulants(mean: f64, variance: f64, third: f64) -> Self {
        let fano = if mean > 0.0 { variance / mean } else { 1.0 };
        Self {
            mean,
            variance,
            fano,
            third,
        }
    }
}

/// Generating function built from the spectrum of `t μ t†`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    spectrum: SpectralData,
    cells: f64,
    statistics: Statistics,
    xi_max: f64,
}

impl GeneratingFunction {
    pub fn new(spectrum: SpectralData, cells: f64, statistics: Statistics) -> Result<Self> {
        if !(cells > 0.0 && cells.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell count ν = {cells} must be positive"
            )));
        }
        let xi_max = match statistics {
            Statistics::Bose if spectrum.max() > 0.0 => (1.0 / spectrum.max()).ln_1p(),
            Statistics::Bose => f64::INFINITY,
            Statistics::Fermi => {
                if let Some(index) = spectrum.eigenvalues().iter().position(|&t| t > 1.0) {
                    return Err(Error::TransmissionOutOfRange {
                        index,
                        value: spectrum.eigenvalues()[index],
                    });
                }
                f64::INFINITY
            }
        };
        Ok(Self {
            spectrum,
            cells,
            statistics,
            xi_max,
        })
    }

    pub fn bose(spectrum: SpectralData, cells: f64) -> Result<Self> {
        Self::new(spectrum, cells, Statistics::Bose)
    }

    pub fn fermi(transmissions: SpectralData, cells: f64) -> Result<Self> {
        Self::new(transmissions, cells, Statistics::Fermi)
    }

    pub fn spectrum(&self) -> &SpectralData {
        &self.spectrum
    }

    pub fn cells(&self) -> f64 {
        self.cells
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }
}

impl CountingCgf for GeneratingFunction {
    fn xi_max(&self) -> f64 {
        self.xi_max
    }

    fn eval_complex(&self, z: C64) -> C64 {
        let w = cexpm1(z);
        let sum: C64 = match self.statistics {
            Statistics::Bose => self
                .spectrum
                .eigenvalues()
                .iter()
                .filter(|&&l| l > 0.0)
                .map(|&l| -cln1p(-w * l))
                .sum(),
            Statistics::Fermi => self
                .spectrum
                .eigenvalues()
                .iter()
                .filter(|&&t| t > 0.0)
                .map(|&t| cln1p(w * t))
                .sum(),
        };
        sum * self.cells
    }

    fn derivatives(&self, xi: f64) -> [f64; 4] {
        let x = xi.exp();
        let w = xi.exp_m1();
        let mut acc = [0.0; 4];
        match self.statistics {
            Statistics::Bose => {
                for &l in self.spectrum.eigenvalues().iter().filter(|&&l| l > 0.0) {
                    let d = 1.0 - w * l;
                    let lx = l * x;
                    acc[0] -= (-w * l).ln_1p();
                    acc[1] += lx / d;
                    acc[2] += lx * (1.0 + l) / (d * d);
                    acc[3] += (1.0 + l) * lx * (d + 2.0 * lx) / (d * d * d);
                }
            }
            Statistics::Fermi => {
                for &t in self.spectrum.eigenvalues().iter().filter(|&&t| t > 0.0) {
                    let e = 1.0 + w * t;
                    let tx = t * x;
                    acc[0] += (w * t).ln_1p();
                    acc[1] += tx / e;
                    acc[2] += tx * (1.0 - t) / (e * e);
                    acc[3] += (1.0 - t) * tx * (e - 2.0 * tx) / (e * e * e);
                }
            }
        }
        acc.map(|v| v * self.cells)
    }

    fn log_vacuum_probability(&self) -> f64 {
        let vals = self.spectrum.eigenvalues();
        match self.statistics {
            Statistics::Bose => -self.cells * vals.iter().map(|l| l.ln_1p()).sum::<f64>(),
            Statistics::Fermi => self.cells * vals.iter().map(|t| (-t).ln_1p()).sum::<f64>(),
        }
    }

    fn support_max(&self) -> Option<f64> {
        match self.statistics {
            Statistics::Bose => None,
            Statistics::Fermi => {
                let open = self.spectrum.eigenvalues().iter().filter(|&&t| t > 0.0).count();
                Some(self.cells * open as f64)
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        self.spectrum.is_zero()
    }

    fn cumulants(&self) -> CumulantSummary {
        let s1 = self.spectrum.power_sum(1);
        let s2 = self.spectrum.power_sum(2);
        let s3 = self.spectrum.power_sum(3);
        let nu = self.cells;
        match self.statistics {
            Statistics::Bose => CumulantSummary::from_cumulants(
                nu * s1,
                nu * (s1 + s2),
                nu * (s1 + 3.0 * s2 + 2.0 * s3),
            ),
            Statistics::Fermi => CumulantSummary::from_cumulants(
                nu * s1,
                nu * (s1 - s2),
                nu * (s1 - 3.0 * s2 + 2.0 * s3),
            ),
        }
    }
}

/// Closed-form generating function of scalar chaotic light through two
/// identical barriers, obtained by integrating the Bose log-determinant over
/// the bimodal density in the large-`N` limit:
///
/// ```text
/// F(ξ) = ν N Γ [1 − √(1 − (e^ξ − 1) f)]
/// ```
///
/// Its count distribution is the K-distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrierCgf {
    occupation: f64,
    weight: f64,
}

impl DoubleBarrierCgf {
    /// `weight` is the product `ν N Γ`.
    pub fn new(occupation: f64, weight: f64) -> Result<Self> {
        if !(occupation >= 0.0 && occupation.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "occupation f = {occupation} must be finite and ≥ 0"
            )));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight νNΓ = {weight} must be positive"
            )));
        }
        Ok(Self { occupation, weight })
    }

    /// Chooses `νNΓ` so that the mean count is `mean` (`n̄ = νNΓ f / 2`).
    pub fn with_mean(occupation: f64, mean: f64) -> Result<Self> {
        if occupation <= 0.0 {
            return Err(Error::InvalidParameter(
                "occupation must be positive to fix the mean".into(),
            ));
        }
        Self::new(occupation, 2.0 * mean / occupation)
    }

    pub fn occupation(&self) -> f64 {
        self.occupation
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl CountingCgf for DoubleBarrierCgf {
    fn xi_max(&self) -> f64 {
        if self.occupation > 0.0 {
            (1.0 / self.occupation).ln_1p()
        } else {
            f64::INFINITY
        }
    }

    fn eval_complex(&self, z: C64) -> C64 {
        // 1 − √(1 − u) = u / (1 + √(1 − u)), stable for small u.
        let u = cexpm1(z) * self.occupation;
        let s = (C64::new(1.0, 0.0) - u).sqrt();
        u / (s + 1.0) * self.weight
    }

    fn derivatives(&self, xi: f64) -> [f64; 4] {
        let f = self.occupation;
        let x = xi.exp();
        let u = xi.exp_m1() * f;
        let s2 = 1.0 - u;
        let s = s2.sqrt();
        let k = self.weight;
        let value = k * u / (1.0 + s);
        let d1 = k * f * x / (2.0 * s);
        let a = f * x / (2.0 * s2);
        let d2 = d1 * (1.0 + a);
        let d3 = d2 * (1.0 + a) + d1 * a * (1.0 + f * x / s2);
        [value, d1, d2, d3]
    }

    fn log_vacuum_probability(&self) -> f64 {
        // 1 − √(1 + f) = −f / (1 + √(1 + f))
        -self.weight * self.occupation / (1.0 + (1.0 + self.occupation).sqrt())
    }

    fn is_degenerate(&self) -> bool {
        self.occupation == 0.0
    }
}

/// Double-barrier closed form on the real axis; `weight` is `ν N Γ`.
pub fn closed_form_double_barrier(occupation: f64, weight: f64, xi: f64) -> Result<f64> {
    DoubleBarrierCgf::new(occupation, weight)?.eval_real(xi)
}

/// Fano factor of a broadband detector, `1 + c Σ ν_j f_j² / Σ ν_j f_j`, where
/// `c` is the geometry coefficient (½ for two barriers, ⅔ for disorder).
pub fn fano_broadband(profile: &[ProfileBin], coefficient: f64) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let (m1, m2) = profile.iter().fold((0.0, 0.0), |(m1, m2), b| {
        (
            m1 + b.weight * b.occupation,
            m2 + b.weight * b.occupation * b.occupation,
        )
    });
    if m1 <= 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok(1.0 + coefficient * m2 / m1)
}

/// Default half-span of the Lorentzian discretization, in half-widths.
pub const LORENTZIAN_SPAN: f64 = 1.0e4;

/// Default grid spacing of the Lorentzian discretization, in half-widths.
pub const LORENTZIAN_SPACING: f64 = 0.1;

/// Discretizes a Lorentzian occupation profile `f(ω) = f_max / (1 + x²)`,
/// `x = (ω − ω₀)/γ`, on a uniform midpoint grid over `±span` half-widths.
/// Each bin carries `cells / points` coherence cells.
///
/// Truncating at `±S` biases `Σνf²/Σνf` upward by a relative `≈ 2/(πS)`.
pub fn lorentzian_profile(f_max: f64, span: f64, points: usize, cells: f64) -> Vec<ProfileBin> {
    let h = 2.0 * span / points as f64;
    let weight = cells / points as f64;
    (0..points)
        .map(|j| {
            let x = -span + (j as f64 + 0.5) * h;
            ProfileBin {
                weight,
                occupation: f_max / (1.0 + x * x),
            }
        })
        .collect()
}

/// `e^z − 1` without cancellation near `z = 0`.
pub(crate) fn cexpm1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * c - 2.0 * half * half;
    let im = z.re.exp() * s;
    C64::new(re, im)
}

/// `ln(1 + u)` without cancellation for small `|u|` (principal branch).
pub(crate) fn cln1p(u: C64) -> C64 {
    if u.norm() < 1e-4 {
        // Alternating series; five terms reach machine precision here.
        let mut term = u;
        let mut acc = C64::new(0.0, 0.0);
        for k in 1..=6 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc += term * (sign / k as f64);
            term *= u;
        }
        acc
    } else {
        (u + 1.0).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn bose(vals: Vec<f64>, nu: f64) -> GeneratingFunction {
        GeneratingFunction::bose(SpectralData::new(vals).unwrap(), nu).unwrap()
    }

    #[test]
    fn zero_is_exact() {
        let g = bose(vec![3.0, 0.2], 7.5);
        assert_eq!(g.eval_real(0.0).unwrap(), 0.0);
        assert_eq!(g.eval_imag(0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn single_unit_eigenvalue_at_ln_one_and_a_half() {
        let g = bose(vec![1.0], 1.0);
        let v = g.eval_real(1.5_f64.ln()).unwrap();
        assert!((v - LN_2).abs() < 1e-15);
    }

    #[test]
    fn imaginary_axis_values() {
        let g = bose(vec![1.0], 1.0);
        let at_pi = g.eval_imag(PI);
        assert!((at_pi.re + 3.0_f64.ln()).abs() < 1e-14, "{at_pi}");
        assert!(at_pi.im.abs() < 1e-14);
        assert!(g.eval_imag(2.0 * PI).norm() < 1e-14);
    }

    #[test]
    fn out_of_domain_beyond_branch_point() {
        let g = bose(vec![2.0, 1.0], 1.0);
        let xi_max = 1.5_f64.ln();
        assert!((g.xi_max() - xi_max).abs() < 1e-15);
        assert!(matches!(
            g.eval_real(xi_max),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(g.eval_real(xi_max - 1e-6).unwrap().is_finite());
    }

    #[test]
    fn weak_spectrum_is_poissonian_to_first_order() {
        let lam = 1e-6;
        let g = bose(vec![lam; 4], 1e6);
        let nbar = 4.0;
        for xi in [-1.0, 0.3, 1.0] {
            let poisson = nbar * f64::exp_m1(xi);
            let v = g.eval_real(xi).unwrap();
            assert!((v - poisson).abs() < 1e-4 * poisson.abs().max(1.0), "{xi}: {v}");
        }
    }

    #[test]
    fn vacuum_cumulants() {
        let c = bose(vec![0.0], 3.0).cumulants();
        assert_eq!((c.mean, c.variance, c.fano), (0.0, 0.0, 1.0));
    }

    #[test]
    fn rank_one_fano_is_one_plus_trace() {
        let g = bose(vec![0.37, 0.0, 0.0], 5.0);
        assert!((g.cumulants().fano - 1.37).abs() < 1e-15);
    }

    #[test]
    fn fermi_fano_is_sub_poissonian() {
        let g = GeneratingFunction::fermi(SpectralData::new(vec![0.5, 0.9]).unwrap(), 3.0)
            .unwrap();
        let c = g.cumulants();
        assert!((c.mean - 4.2).abs() < 1e-14);
        assert!((c.variance - 3.0 * (0.25 + 0.09)).abs() < 1e-14);
        assert!(c.fano < 1.0);
    }

    #[test]
    fn fermi_rejects_transmission_above_one() {
        let err =
            GeneratingFunction::fermi(SpectralData::new(vec![1.2]).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::TransmissionOutOfRange { .. }));
    }

    #[test]
    fn broadband_examples() {
        let flat = vec![
            ProfileBin {
                weight: 2.0,
                occupation: 3.0
            };
            5
        ];
        assert!((fano_broadband(&flat, 0.5).unwrap() - 2.5).abs() < 1e-15);
        let two = [
            ProfileBin {
                weight: 1.0,
                occupation: 0.0,
            },
            ProfileBin {
                weight: 1.0,
                occupation: 2.0,
            },
        ];
        assert_eq!(fano_broadband(&two, 0.5).unwrap(), 2.0);
        assert_eq!(fano_broadband(&[], 0.5), Err(Error::EmptyProfile));
        let dark = [ProfileBin {
            weight: 1.0,
            occupation: 0.0,
        }];
        assert_eq!(fano_broadband(&dark, 0.5), Err(Error::ZeroMean));
    }

    #[test]
    fn lorentzian_truncation_bias_matches_estimate() {
        let f_max = 8.0;
        let span = 100.0;
        let profile = lorentzian_profile(f_max, span, 20_000, 1.0);
        let fano = fano_broadband(&profile, 0.5).unwrap();
        let biased = 1.0 + 0.25 * f_max * (1.0 + 2.0 / (PI * span));
        assert!((fano - biased).abs() < 2e-4, "{fano} vs {biased}");
    }

    #[test]
    fn double_barrier_cumulants_are_exact() {
        for f in [0.1, 1.0, 8.0, 100.0] {
            let g = DoubleBarrierCgf::new(f, 3.0).unwrap();
            let c = g.cumulants();
            assert!((c.mean - 1.5 * f).abs() < 1e-12 * f);
            assert!((c.fano - (1.0 + 0.5 * f)).abs() < 1e-12 * (1.0 + f));
        }
    }

    #[test]
    fn double_barrier_vacuum_limit() {
        let g = DoubleBarrierCgf::new(8.0, 2.0).unwrap();
        let far = g.derivatives(-60.0)[0];
        assert!((far - g.log_vacuum_probability()).abs() < 1e-12);
        assert!((g.log_vacuum_probability() - 2.0 * (1.0 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn complex_helpers_agree_with_naive_forms() {
        for z in [C64::new(0.3, -1.1), C64::new(-2.0, 2.5), C64::new(1e-7, 3e-8)] {
            let naive = z.exp() - 1.0;
            assert!((cexpm1(z) - naive).norm() < 1e-15 * naive.norm().max(1.0) + 1e-22);
        }
        let u = C64::new(3e-5, -2e-5);
        let exact = C64::new(
            0.5 * ((1.0 + u.re).powi(2) + u.im * u.im).ln(),
            u.im.atan2(1.0 + u.re),
        );
        assert!((cln1p(u) - exact).norm() < 1e-12 * u.norm());
    }

    fn arb_spectrum() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..4.0f64, 1..8)
    }

    proptest! {
        #[test]
        fn cumulants_match_finite_differences(vals in arb_spectrum(), nu in 0.5..20.0f64) {
            let g = bose(vals, nu);
            let h = 1e-4;
            let f = |x: f64| g.eval_real(x).unwrap();
            let (fm2, fm1, f0, fp1, fp2) = (f(-2.0 * h), f(-h), f(0.0), f(h), f(2.0 * h));
            let d1 = (fp1 - fm1) / (2.0 * h);
            let d2 = (fp1 - 2.0 * f0 + fm1) / (h * h);
            let d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
            let c = g.cumulants();
            prop_assert!((d1 - c.mean).abs() <= 1e-6 * c.mean.max(1e-3));
            prop_assert!((d2 - c.variance).abs() <= 1e-6 * c.variance.max(1e-3));
            // The third difference carries O(ε/h³) rounding; 1e-4 relative is its floor.
            prop_assert!((d3 - c.third).abs() <= 1e-4 * c.third.max(1e-3));
        }

        #[test]
        fn derivatives_match_closed_forms_away_from_zero(vals in arb_spectrum(), nu in 0.5..5.0f64, frac in -3.0..0.9f64) {
            let g = bose(vals, nu);
            let xi = if frac < 0.0 { frac } else { frac * g.xi_max() };
            let h = 1e-5 * (1.0 + xi.abs());
            let [_, d1, d2, _] = g.derivatives(xi);
            let fd1 = (g.eval_real(xi + h).unwrap() - g.eval_real(xi - h).unwrap()) / (2.0 * h);
            let fd2 = (g.derivatives(xi + h)[1] - g.derivatives(xi - h)[1]) / (2.0 * h);
            prop_assert!((fd1 - d1).abs() <= 1e-5 * d1.abs().max(1e-6));
            prop_assert!((fd2 - d2).abs() <= 1e-5 * d2.abs().max(1e-6));
        }

        #[test]
        fn convex_on_the_real_domain(vals in arb_spectrum(), nu in 0.5..10.0f64) {
            let g = bose(vals, nu);
            let top = g.xi_max().min(5.0);
            for i in 0..50 {
                let xi = -5.0 + (top - 1e-3 + 5.0) * i as f64 / 50.0;
                let h = 1e-3;
                let second = g.eval_real(xi + h).unwrap() - 2.0 * g.eval_real(xi).unwrap()
                    + g.eval_real(xi - h).unwrap();
                prop_assert!(second >= -1e-12 * g.eval_real(xi).unwrap().abs().max(1.0));
            }
        }

        #[test]
        fn characteristic_function_is_bounded(vals in arb_spectrum(), nu in 0.1..10.0f64) {
            let g = bose(vals, nu);
            for k in 0..1024 {
                let theta = 2.0 * PI * k as f64 / 1024.0;
                prop_assert!(g.eval_imag(theta).exp().norm() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn poisson_limit_is_linear(lmax in 1e-4..1e-2f64) {
            // ν Σλ = 10 held fixed, eight equal eigenvalues.
            let nu = 10.0 / (8.0 * lmax);
            let fano = bose(vec![lmax; 8], nu).cumulants().fano;
            prop_assert!(((fano - 1.0) / lmax - 1.0).abs() < 1e-9);
        }
    }
}
