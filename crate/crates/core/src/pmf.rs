//! The photocount distribution `P(n)`.
//!
//! # Exact inversion
//!
//! `P(n) = (1/2π) ∫ dθ exp[F(iθ) − inθ]` is evaluated as a discrete Fourier
//! transform of the characteristic function. A plain DFT resolves
//! probabilities only down to ~1e-16 of the peak, while heavy-tailed counts
//! of degenerate light are needed over thousands of decades. We therefore
//! invert exponentially tilted copies of the distribution,
//!
//! ```text
//! q_ξ(n) = P(n) e^{ξn − F(ξ)},   Σ_n q_ξ(n) e^{iθn} = exp[F(ξ + iθ) − F(ξ)],
//! ```
//!
//! with tilts `ξ` placed at the saddle points of a ladder of target counts.
//! Each tilt resolves `q_ξ` to full relative precision near its own mean, and
//! `ln P(n) = ln q_ξ(n) + F(ξ) − ξn` is taken from the tilt with the best
//! signal-to-noise ratio at `n`. Everything is stored in log space.
//!
//! The DFT grid has at least `4(n_max + 1)` points. Wrap-around aliasing of
//! each tilted distribution is bounded by a Chernoff bound at the grid size;
//! the probability mass beyond `n_max` by a Chernoff bound at `n_max + 1`.
//!
//! # Saddle point
//!
//! `P(n) ≈ exp[F(ξ*) − nξ*] / √(2π F″(ξ*))` with `F′(ξ*) = n`. The large
//! deviation function `g(n/n̄) = ln P(n) / n̄` is just the log of this value
//! divided by the mean and is not materialized separately.

use std::f64::consts::{LN_10, PI};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::genfn::CountingCgf;
use crate::model::{RegimeWarning, SpectralData, MUCH_LESS};
use crate::{Error, Result, C64};

/// Target truncated tail mass when `n_max` is chosen automatically.
pub const TAIL_MASS_TARGET: f64 = 1e-12;

/// How a [`CountDistribution`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    FourierExact,
    SaddlePoint,
    PoissonClosed,
    KClosed,
    GaussianReference,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FourierExact => "exact",
            Self::SaddlePoint => "saddle",
            Self::PoissonClosed => "poisson",
            Self::KClosed => "k_closed",
            Self::GaussianReference => "gaussian",
        }
    }
}

/// Accuracy bookkeeping attached to a [`CountDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `|Σ_n p_n − 1|` over the stored range.
    pub normalization_defect: f64,
    /// Upper bound on the probability mass beyond `n_max`.
    pub truncated_tail_mass_bound: f64,
    /// Largest estimated relative error of a stored `p_n` (exact inversion).
    pub max_relative_error: f64,
    /// Entries that fell below the numerical noise floor and were set to 0.
    pub unresolved: usize,
}

/// Probability mass function on `0..=n_max`, kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    log_p: Vec<f64>,
    p: Vec<f64>,
    method: Method,
    diagnostics: Diagnostics,
}

impl CountDistribution {
    /// Builds a distribution from `ln p_n`; `−∞` encodes an exact zero.
    pub fn from_log(log_p: Vec<f64>, method: Method, truncated_tail_mass_bound: f64) -> Self {
        let p: Vec<f64> = log_p.iter().map(|l| l.exp()).collect();
        let total: f64 = p.iter().sum();
        Self {
            log_p,
            p,
            method,
            diagnostics: Diagnostics {
                normalization_defect: (total - 1.0).abs(),
                truncated_tail_mass_bound,
                ..Diagnostics::default()
            },
        }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn log_p(&self) -> &[f64] {
        &self.log_p
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.p.len().saturating_sub(1)
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.p
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - m).powi(2) * p)
            .sum()
    }

    /// Cumulative sums `Σ_{k ≤ n} p_k`.
    pub fn cdf(&self) -> Vec<f64> {
        self.p
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Kolmogorov distance between the pmf and a normal law (with continuity
    /// correction), taken over `|n − mean| ≤ half_width · sd`.
    pub fn kolmogorov_to_normal(&self, mean: f64, sd: f64, half_width: f64) -> f64 {
        let cdf = self.cdf();
        cdf.iter()
            .enumerate()
            .filter(|(n, _)| (*n as f64 - mean).abs() <= half_width * sd)
            .map(|(n, c)| (c - normal_cdf((n as f64 + 0.5 - mean) / sd)).abs())
            .fold(0.0, f64::max)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Real saddle point `ξ*` with `F′(ξ*) = target`.
///
/// Newton iteration safeguarded by bisection on a bracket inside
/// `(−∞, ξ_max)`; `F′` is increasing, so the bracket always exists for
/// reachable targets. Converges to `|F′ − target| ≤ 1e−9·max(target, 1)`.
pub fn solve_saddle<G: CountingCgf + ?Sized>(g: &G, target: f64) -> Result<f64> {
    if g.is_degenerate() {
        return Err(Error::Degenerate);
    }
    if target.is_nan() || target <= 0.0 || !target.is_finite() {
        return Err(Error::NoSaddle { n: target });
    }
    if let Some(sup) = g.support_max() {
        if target >= sup {
            return Err(Error::NoSaddle { n: target });
        }
    }
    let tol = 1e-9 * target.max(1.0);
    let slope = |xi: f64| g.derivatives(xi)[1];

    let mut hi = g.xi_max();
    if !hi.is_finite() {
        hi = 1.0;
        while slope(hi) < target {
            hi *= 2.0;
            if hi > 700.0 {
                return Err(Error::NoSaddle { n: target });
            }
        }
    }
    let mut lo = (hi.min(0.0)) - 1.0;
    while slope(lo) > target {
        lo = 2.0 * lo - 1.0;
        if lo < -1e4 {
            return Err(Error::NoSaddle { n: target });
        }
    }

    let mean = slope(0.0);
    let mut xi = if mean > 0.0 {
        (target / mean).ln()
    } else {
        0.5 * (lo + hi)
    };
    if !(xi > lo && xi < hi) {
        xi = 0.5 * (lo + hi);
    }

    for _ in 0..500 {
        let [_, d1, d2, _] = g.derivatives(xi);
        let residual = d1 - target;
        if residual.abs() <= tol {
            return Ok(xi);
        }
        if residual > 0.0 {
            hi = xi;
        } else {
            lo = xi;
        }
        let newton = xi - residual / d2;
        xi = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * xi.abs().max(1.0) {
            return Ok(xi);
        }
    }
    Ok(xi)
}

/// Log of the saddle-point approximation to `P(n)`, `n ≥ 1`.
pub fn saddle_point_log<G: CountingCgf + ?Sized>(g: &G, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "saddle point needs n ≥ 1".into(),
        ));
    }
    let nf = n as f64;
    let xi = solve_saddle(g, nf)?;
    let [value, _, d2, _] = g.derivatives(xi);
    Ok(value - nf * xi - 0.5 * (2.0 * PI * d2).ln())
}

/// Saddle-point approximation to `P(n)`, `n ≥ 1`.
pub fn saddle_point<G: CountingCgf + ?Sized>(g: &G, n: u64) -> Result<f64> {
    saddle_point_log(g, n).map(f64::exp)
}

/// Saddle-point values for `n = 1..=n_max`; `n = 0` carries the exact vacuum
/// probability `exp F(−∞)`.
pub fn saddle_distribution<G: CountingCgf + ?Sized>(g: &G, n_max: usize) -> Result<CountDistribution> {
    if g.is_degenerate() {
        return Ok(point_mass(n_max));
    }
    let support = g.support_max();
    let log_p = (0..=n_max as u64)
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                Ok(g.log_vacuum_probability())
            } else if support.is_some_and(|s| n as f64 >= s) {
                Ok(f64::NEG_INFINITY)
            } else {
                saddle_point_log(g, n)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = chernoff_tail_bound(g, (n_max + 1) as f64);
    Ok(CountDistribution::from_log(log_p, Method::SaddlePoint, bound))
}

/// Chernoff bound `P(N ≥ n) ≤ exp[F(ξ_n) − ξ_n n]` for `n` above the mean.
pub fn chernoff_tail_bound<G: CountingCgf + ?Sized>(g: &G, n: f64) -> f64 {
    if g.is_degenerate() {
        return if n > 0.0 { 0.0 } else { 1.0 };
    }
    if let Some(sup) = g.support_max() {
        if n > sup {
            return 0.0;
        }
    }
    if n <= g.derivatives(0.0)[1] {
        return 1.0;
    }
    match solve_saddle(g, n) {
        Ok(xi) => (g.derivatives(xi)[0] - xi * n).exp().min(1.0),
        // At the edge of a finite support there is no saddle; stay conservative.
        Err(_) => 1.0,
    }
}

/// Smallest `n_max` whose truncated tail mass is provably below `target`.
pub fn auto_n_max<G: CountingCgf + ?Sized>(g: &G, target: f64) -> usize {
    if g.is_degenerate() {
        return 0;
    }
    let mean = g.derivatives(0.0)[1];
    let ok = |n: usize| chernoff_tail_bound(g, (n + 1) as f64) <= target;
    let mut hi = (mean.ceil() as usize).max(1);
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn point_mass(n_max: usize) -> CountDistribution {
    let mut log_p = vec![f64::NEG_INFINITY; n_max + 1];
    log_p[0] = 0.0;
    CountDistribution::from_log(log_p, Method::FourierExact, 0.0)
}

/// Ladder of tilts covering `0..=n_max`: `ξ = 0`, then saddle points of
/// targets spaced four tilted standard deviations apart in both directions.
fn choose_tilts<G: CountingCgf + ?Sized>(g: &G, n_max: usize) -> Result<Vec<f64>> {
    const SPACING: f64 = 4.0;
    let top = match g.support_max() {
        Some(s) => (n_max as f64).min(s - 0.5),
        None => n_max as f64,
    };
    let mut tilts = vec![0.0];

    let mut xi = 0.0;
    loop {
        let [_, m, v, _] = g.derivatives(xi);
        if m >= top {
            break;
        }
        let target = (m + SPACING * v.sqrt().max(1.0)).min(top);
        let next = solve_saddle(g, target)?;
        if next <= xi {
            break;
        }
        tilts.push(next);
        xi = next;
        if target >= top {
            break;
        }
    }

    let floor = 0.5;
    let mut xi = 0.0;
    loop {
        let [_, m, v, _] = g.derivatives(xi);
        if m <= floor {
            break;
        }
        let target = m - SPACING * v.sqrt().max(1.0);
        if target <= floor {
            tilts.push(solve_saddle(g, floor.min(0.5 * m))?);
            break;
        }
        let next = solve_saddle(g, target)?;
        tilts.push(next);
        xi = next;
    }
    Ok(tilts)
}

/// Per-count best estimate across tilts.
#[derive(Clone)]
struct Best {
    score: Vec<f64>,
    log_p: Vec<f64>,
}

impl Best {
    fn new(len: usize) -> Self {
        Self {
            score: vec![f64::NEG_INFINITY; len],
            log_p: vec![f64::NEG_INFINITY; len],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for i in 0..self.score.len() {
            if other.score[i] > self.score[i] {
                self.score[i] = other.score[i];
                self.log_p[i] = other.log_p[i];
            }
        }
        self
    }
}

/// Below this `Re[F(ξ + iθ) − F(ξ)]` the tilted characteristic function is
/// zero in double precision. Every distribution here is a convolution of
/// geometric or Bernoulli laws (or a mixture of them), whose characteristic
/// function has a modulus non-increasing in `|θ|` on `[0, π]`, so the grid
/// scan stops at the first such point.
const UNDERFLOW: f64 = -745.0;

/// Exact photocount distribution on `0..=n_max` by tilted Fourier inversion.
///
/// `n_max` is raised if needed so that the truncated tail mass is below
/// [`TAIL_MASS_TARGET`].
pub fn invert_fourier<G: CountingCgf + ?Sized>(g: &G, n_max: usize) -> Result<CountDistribution> {
    if g.is_degenerate() {
        return Ok(point_mass(n_max));
    }
    let n_max = n_max.max(auto_n_max(g, TAIL_MASS_TARGET));
    let len = n_max + 1;
    let grid = (4 * len).next_power_of_two();
    let tilts = choose_tilts(g, n_max)?;
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(grid);

    let alias_at = |xi: f64, base: f64| -> f64 {
        let l = grid as f64;
        if g.support_max().is_some_and(|s| l > s) {
            return 0.0;
        }
        match solve_saddle(g, l) {
            Ok(xl) if xl > xi => (g.derivatives(xl)[0] - base - (xl - xi) * l).exp(),
            _ => 1.0,
        }
    };

    let best = tilts
        .par_iter()
        .fold(
            || Best::new(len),
            |mut best, &xi| {
                let base = if xi == 0.0 { 0.0 } else { g.derivatives(xi)[0] };
                let mut buf = vec![C64::new(0.0, 0.0); grid];
                let mut max_f = 0.0_f64;
                let mut l1 = 0.0;
                buf[0] = C64::new(1.0, 0.0);
                l1 += 1.0;
                for k in 1..=grid / 2 {
                    let theta = 2.0 * PI * k as f64 / grid as f64;
                    let fz = g.eval_complex(C64::new(xi, theta));
                    if fz.re - base < UNDERFLOW {
                        break;
                    }
                    max_f = max_f.max(fz.norm());
                    let v = (fz - base).exp();
                    buf[k] = v;
                    buf[grid - k] = v.conj();
                    l1 += if k == grid / 2 { v.norm() } else { 2.0 * v.norm() };
                }
                fft.process(&mut buf);

                let scale = 1.0 / grid as f64;
                let eps = f64::EPSILON;
                let noise = 4.0 * eps * (2.0 + max_f + base.abs() + (grid as f64).log2()) * l1 * scale;
                let floor = noise + alias_at(xi, base);
                let ln_floor = floor.ln();
                for (n, z) in buf.iter().take(len).enumerate() {
                    let q = z.re * scale;
                    if q <= 0.0 {
                        continue;
                    }
                    let lq = q.ln();
                    let score = lq - ln_floor;
                    if score > best.score[n] {
                        best.score[n] = score;
                        best.log_p[n] = lq + base - xi * n as f64;
                    }
                }
                best
            },
        )
        .reduce(|| Best::new(len), Best::merge);

    let mut unresolved = 0;
    let mut max_rel: f64 = 0.0;
    let log_p: Vec<f64> = best
        .score
        .iter()
        .zip(&best.log_p)
        .map(|(&score, &lp)| {
            if score > 0.0 {
                max_rel = max_rel.max((-score).exp());
                lp
            } else {
                unresolved += 1;
                f64::NEG_INFINITY
            }
        })
        .collect();

    let bound = chernoff_tail_bound(g, len as f64);
    let mut dist = CountDistribution::from_log(log_p, Method::FourierExact, bound);
    dist.diagnostics.max_relative_error = max_rel;
    dist.diagnostics.unresolved = unresolved;
    Ok(dist)
}

/// `P(n) = n̄ⁿ e^{−n̄} / n!` on `0..=n_max`.
pub fn poisson_distribution(mean: f64, n_max: usize) -> CountDistribution {
    let log_p = (0..=n_max)
        .map(|n| poisson_log_pmf(mean, n as u64))
        .collect();
    let tail = if (n_max as f64) < mean {
        1.0
    } else {
        // Chernoff bound for the Poisson law at n_max + 1.
        let k = (n_max + 1) as f64;
        (k - mean - k * (k / mean).ln()).exp().min(1.0)
    };
    CountDistribution::from_log(log_p, Method::PoissonClosed, tail)
}

pub fn poisson_log_pmf(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    nf * mean.ln() - mean - ln_gamma(nf + 1.0)
}

/// Large-`n` asymptotic form of the Poisson law,
/// `ln P = −½ ln(2πn) + n − n̄ − n ln(n/n̄)`.
pub fn poisson_stirling_log(mean: f64, n: u64) -> f64 {
    let nf = n as f64;
    -0.5 * (2.0 * PI * nf).ln() + nf - mean - nf * (nf / mean).ln()
}

/// Normal density with the given moments, sampled at the integers.
pub fn gaussian_reference(mean: f64, variance: f64, n_max: usize) -> CountDistribution {
    let norm = -0.5 * (2.0 * PI * variance).ln();
    let log_p = (0..=n_max)
        .map(|n| norm - (n as f64 - mean).powi(2) / (2.0 * variance))
        .collect();
    CountDistribution::from_log(log_p, Method::GaussianReference, f64::NAN)
}

/// Large-`f` form of the double-barrier count distribution,
///
/// ```text
/// P(n) = C exp(−n/f − n̄²/(n f)),   C = (π f n̄)^{-1/2} e^{2n̄/f},
/// ```
///
/// valid for `1 ≪ f ≪ n̄`. Its essential singularity at `n = 0` is cut off:
/// below `n̄/√f` the value is floored at `P(0) = exp(−2n̄/√f)`, a crossover
/// rule that is only qualitatively justified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KDistribution {
    occupation: f64,
    mean: f64,
}

impl KDistribution {
    pub fn new(occupation: f64, mean: f64) -> Result<Self> {
        if !(occupation > 0.0 && mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "K-distribution needs f > 0 and n̄ > 0 (got f = {occupation}, n̄ = {mean})"
            )));
        }
        Ok(Self { occupation, mean })
    }

    pub fn warnings(&self) -> Vec<RegimeWarning> {
        let (f, m) = (self.occupation, self.mean);
        if f >= MUCH_LESS && MUCH_LESS * f <= m {
            Vec::new()
        } else {
            vec![RegimeWarning::KDistributionRegime { f, mean: m }]
        }
    }

    /// `n̄ / √f`, below which the distribution saturates.
    pub fn saturation_count(&self) -> f64 {
        self.mean / self.occupation.sqrt()
    }

    /// `ln P(0) = −2n̄/√f`.
    pub fn log_saturation(&self) -> f64 {
        -2.0 * self.saturation_count()
    }

    pub fn log_pmf(&self, n: u64) -> f64 {
        let (f, m) = (self.occupation, self.mean);
        if n == 0 {
            return self.log_saturation();
        }
        let nf = n as f64;
        let log_c = -0.5 * (PI * f * m).ln() + 2.0 * m / f;
        let log_k = log_c - nf / f - m * m / (nf * f);
        if nf < self.saturation_count() {
            log_k.max(self.log_saturation())
        } else {
            log_k
        }
    }

    pub fn distribution(&self, n_max: usize) -> CountDistribution {
        let log_p = (0..=n_max as u64).map(|n| self.log_pmf(n)).collect();
        CountDistribution::from_log(log_p, Method::KClosed, f64::NAN)
    }
}

/// `P(n)` of the large-`f` K-distribution; see [`KDistribution`].
pub fn k_distribution(occupation: f64, mean: f64, n: u64) -> Result<f64> {
    let k = KDistribution::new(occupation, mean)?;
    for w in k.warnings() {
        log::warn!("{w}");
    }
    Ok(k.log_pmf(n).exp())
}

/// Asymptotic decay rate of `P(n)` per count, `ln(1 + 1/λ_max)`: the distance
/// of the branch point of `F` from the origin. For `λ_max ≫ 1` this is
/// `≈ 1/λ_max`.
pub fn tail_rate(spectrum: &SpectralData) -> Result<f64> {
    let lmax = spectrum.max();
    if lmax <= 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    Ok((1.0 / lmax).ln_1p())
}

/// Decay rate `−d ln p_n / dn` fitted by least squares over the last decade
/// of probability of a distribution (at least three points).
pub fn fitted_tail_rate(dist: &CountDistribution) -> Option<f64> {
    let lp = dist.log_p();
    let end = lp.iter().rposition(|v| v.is_finite())?;
    let threshold = lp[end] + LN_10;
    let mut start = end;
    while start > 0 && lp[start - 1].is_finite() && lp[start - 1] <= threshold {
        start -= 1;
    }
    if end - start < 2 {
        start = end.checked_sub(2)?;
    }
    let pts: Vec<(f64, f64)> = (start..=end).map(|n| (n as f64, lp[n])).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}
