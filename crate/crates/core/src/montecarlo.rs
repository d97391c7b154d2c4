//! Brute-force sampling oracle for the photocount distribution.
//!
//! Each trial draws, for every coherence cell, a coherent-state amplitude `α`
//! from the Gaussian ensemble with covariance `μ`, propagates it through the
//! scatterer, and draws a Poisson count with mean `‖tα‖²`. The trial count is
//! the sum over cells. Nothing here uses the generating function, so the
//! oracle is independent of [`crate::genfn`] and [`crate::pmf`].
//!
//! Trials are split into fixed-size blocks. Block `b` draws from the ChaCha
//! stream `b` of the master seed, so output depends only on the seed and the
//! configuration, never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{validate, CountingWindow, ModeCovariance, TransmissionSpec};
use crate::stats::{block_ranges, jackknife_error, JACKKNIFE_BLOCKS};
use crate::{CMatrix, Error, Result, C64};

/// Trials per random substream.
pub const BLOCK_TRIALS: usize = 4096;

/// Monte Carlo run parameters. `cells` is the integer realization of `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub cells: u32,
    pub trials: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(cells: u32, trials: usize, seed: u64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("cells must be positive".into()));
        }
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        Ok(Self { cells, trials, seed })
    }
}

/// `t V diag(√m)`, which maps a standard complex normal vector `z` to the
/// transmitted amplitude `t α` with `⟨α α†⟩ = μ = V diag(m) V†`.
enum Propagator {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl Propagator {
    fn new(mu: &ModeCovariance, t: &TransmissionSpec) -> Result<Self> {
        let tm = t.to_matrix()?;
        let (vals, vecs) = mu.eigen()?;
        let mut m = tm * vecs;
        for (j, &v) in vals.iter().enumerate() {
            let s = v.max(0.0).sqrt();
            m.column_mut(j).scale_mut(s);
        }
        let diagonal = m.nrows() == m.ncols()
            && m.iter()
                .enumerate()
                .all(|(k, z)| k % (m.nrows() + 1) == 0 || *z == C64::new(0.0, 0.0));
        Ok(if diagonal {
            Self::Diagonal((0..m.nrows()).map(|i| m[(i, i)].norm_sqr()).collect())
        } else {
            Self::Dense(m)
        })
    }

    /// `‖t α‖²` for one freshly drawn amplitude.
    fn intensity<R: Rng>(&self, rng: &mut R, z: &mut [C64]) -> f64 {
        for zi in z.iter_mut() {
            *zi = complex_normal(rng);
        }
        match self {
            Self::Diagonal(g) => g.iter().zip(z.iter()).map(|(g, z)| g * z.norm_sqr()).sum(),
            Self::Dense(m) => (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| m[(i, j)] * z[j])
                        .sum::<C64>()
                        .norm_sqr()
                })
                .sum(),
        }
    }

    fn modes(&self) -> usize {
        match self {
            Self::Diagonal(g) => g.len(),
            Self::Dense(m) => m.ncols(),
        }
    }
}

/// Circularly symmetric complex normal with `E|z|² = 1`.
fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}

/// Photocounts of `cfg.trials` independent counting windows.
pub fn sample_counts(
    mu: &ModeCovariance,
    t: &TransmissionSpec,
    cfg: &McConfig,
) -> Result<Vec<u64>> {
    validate(mu, t, &CountingWindow::new(cfg.cells as f64)).into_result()?;
    let prop = Propagator::new(mu, t)?;
    let blocks = cfg.trials.div_ceil(BLOCK_TRIALS);
    let counts = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let len = BLOCK_TRIALS.min(cfg.trials - b * BLOCK_TRIALS);
            let mut z = vec![C64::new(0.0, 0.0); prop.modes()];
            let prop = &prop;
            (0..len)
                .map(|_| {
                    (0..cfg.cells)
                        .map(|_| {
                            let w = prop.intensity(&mut rng, &mut z);
                            poisson(&mut rng, w)
                        })
                        .sum::<u64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(counts)
}

/// Sample moments with block-jackknife standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub trials: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub fano: f64,
    pub mean_error: f64,
    pub variance_error: f64,
    pub fano_error: f64,
    /// `histogram[n]` = number of trials with count `n`.
    #[serde(skip)]
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    s1: f64,
    s2: f64,
}

impl Sums {
    fn minus(self, o: Self) -> Self {
        Self {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
        }
    }

    /// (mean, unbiased variance) with the data shifted by `shift`.
    fn moments(self, shift: f64) -> (f64, f64) {
        let m = self.s1 / self.n;
        let var = if self.n > 1.0 {
            ((self.s2 - self.s1 * m) / (self.n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (m + shift, var)
    }
}

fn fano_of(mean: f64, var: f64) -> f64 {
    if mean > 0.0 {
        var / mean
    } else {
        1.0
    }
}

pub fn empirical_summary(counts: &[u64]) -> Result<EmpiricalSummary> {
    if counts.is_empty() {
        return Err(Error::Empty);
    }
    // Shifting by a sample value keeps the variance free of cancellation.
    let shift = counts[0] as f64;
    let sums = |xs: &[u64]| {
        xs.iter().fold(Sums::default(), |acc, &c| {
            let d = c as f64 - shift;
            Sums {
                n: acc.n + 1.0,
                s1: acc.s1 + d,
                s2: acc.s2 + d * d,
            }
        })
    };
    let total = sums(counts);
    let (mean, variance) = total.moments(shift);

    let (mut lm, mut lv, mut lf) = (Vec::new(), Vec::new(), Vec::new());
    if counts.len() >= 2 * JACKKNIFE_BLOCKS {
        for r in block_ranges(counts.len(), JACKKNIFE_BLOCKS) {
            let (m, v) = total.minus(sums(&counts[r])).moments(shift);
            lm.push(m);
            lv.push(v);
            lf.push(fano_of(m, v));
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; max + 1];
    for &c in counts {
        histogram[c as usize] += 1;
    }
    Ok(EmpiricalSummary {
        trials: counts.len(),
        mean,
        variance,
        fano: fano_of(mean, variance),
        mean_error: jackknife_error(&lm),
        variance_error: jackknife_error(&lv),
        fano_error: jackknife_error(&lf),
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_eigenvalues, sample_haar_unitary, EigenvalueDensity};
    use crate::genfn::{CountingCgf, GeneratingFunction};
    use crate::model::{reduce_to_spectrum, Ensemble};
    use crate::pmf::invert_fourier;
    use crate::stats::chi_square;

    #[test]
    fn vacuum_counts_nothing() {
        let mu = ModeCovariance::scalar(0.0, 3);
        let t = TransmissionSpec::Eigenvalues(vec![1.0, 0.5, 0.2]);
        let counts = sample_counts(&mu, &t, &McConfig::new(4, 1000, 1).unwrap()).unwrap();
        assert!(counts.iter().all(|&c| c == 0));
        assert_eq!(counts.len(), 1000);
    }

    #[test]
    fn independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = TransmissionSpec::Matrix(sample_haar_unitary(3, &mut rng).scale(0.8));
        let mu = ModeCovariance::diagonal(&[2.0, 1.0, 0.3]);
        let cfg = McConfig::new(3, 3 * BLOCK_TRIALS + 17, 99).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_counts(&mu, &t, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn single_mode_histogram_is_geometric() {
        let f = 1.7;
        let mu = ModeCovariance::scalar(f, 1);
        let t = TransmissionSpec::Eigenvalues(vec![1.0]);
        let counts = sample_counts(&mu, &t, &McConfig::new(1, 100_000, 3).unwrap()).unwrap();
        let s = empirical_summary(&counts).unwrap();
        let g = GeneratingFunction::bose(reduce_to_spectrum(&mu, &t).unwrap(), 1.0).unwrap();
        let exact = invert_fourier(&g, s.histogram.len()).unwrap();
        let test = chi_square(&s.histogram, 0, exact.p(), 5.0);
        assert!(test.passes(0.01), "{test:?}");
    }

    #[test]
    fn rank_one_fano() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v: Vec<C64> = (0..4).map(|_| complex_normal(&mut rng)).collect();
        let v = nalgebra::DVector::from_vec(v);
        let mu = ModeCovariance::Matrix(&v * v.adjoint());
        let tm = sample_haar_unitary(4, &mut rng).scale(0.6);
        let expected = (mu.to_matrix() * tm.adjoint() * &tm).trace().re;
        let t = TransmissionSpec::Matrix(tm);
        let s = empirical_summary(&sample_counts(&mu, &t, &McConfig::new(2, 100_000, 8).unwrap()).unwrap()).unwrap();
        assert!(
            ((s.fano - 1.0) - expected).abs() < 5.0 * s.fano_error,
            "{} ± {} vs {}",
            s.fano - 1.0,
            s.fano_error,
            expected
        );
    }

    #[test]
    fn double_barrier_sampled_spectrum() {
        let d = EigenvalueDensity::new(Ensemble::DoubleBarrier, 200, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ts = sample_eigenvalues(&d, &mut rng);
        let mu = ModeCovariance::scalar(8.0, 200);
        let t = TransmissionSpec::Eigenvalues(ts);
        let cells = 50;
        let counts = sample_counts(&mu, &t, &McConfig::new(cells, 20_000, 12).unwrap()).unwrap();
        let s = empirical_summary(&counts).unwrap();
        let g = GeneratingFunction::bose(reduce_to_spectrum(&mu, &t).unwrap(), cells as f64).unwrap();
        let c = g.cumulants();
        assert!((s.mean - c.mean).abs() < 5.0 * s.mean_error, "{s:?} vs {c:?}");
        assert!((s.variance - c.variance).abs() < 5.0 * s.variance_error);
        assert!((s.fano - c.fano).abs() < 5.0 * s.fano_error);
    }

    #[test]
    fn summary_of_constant_list() {
        let s = empirical_summary(&[7; 500]).unwrap();
        assert_eq!(s.mean, 7.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.histogram[7], 500);
        assert_eq!(empirical_summary(&[]), Err(Error::Empty));
    }

    #[test]
    fn poisson_self_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let counts: Vec<u64> = (0..100_000).map(|_| poisson(&mut rng, 100.0)).collect();
        let s = empirical_summary(&counts).unwrap();
        assert!((s.fano - 1.0).abs() < 5.0 * s.fano_error, "{s:?}");
        assert!((s.mean - 100.0).abs() < 5.0 * s.mean_error);
    }

    #[test]
    fn rejects_unresolved_ensemble_and_bad_input() {
        let mu = ModeCovariance::scalar(1.0, 2);
        let cfg = McConfig::new(1, 10, 0).unwrap();
        let ens = TransmissionSpec::Ensemble {
            ensemble: Ensemble::Diffusive,
            modes: 2,
            gamma: 0.5,
        };
        assert_eq!(sample_counts(&mu, &ens, &cfg), Err(Error::UnresolvedEnsemble));
        let bad = TransmissionSpec::Eigenvalues(vec![1.5, 0.1]);
        assert!(matches!(sample_counts(&mu, &bad, &cfg), Err(Error::Invalid(_))));
        assert!(McConfig::new(0, 10, 0).is_err());
    }

    #[test]
    fn empirical_cgf_converges() {
        // E[e^{ξ n}] against exp F(ξ) at a moderate ξ.
        let mu = ModeCovariance::diagonal(&[0.8, 0.3]);
        let t = TransmissionSpec::Eigenvalues(vec![0.9, 0.6]);
        let cells = 3;
        let counts = sample_counts(&mu, &t, &McConfig::new(cells, 200_000, 21).unwrap()).unwrap();
        let xi = 0.2_f64;
        let vals: Vec<f64> = counts.iter().map(|&n| (xi * n as f64).exp()).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        let g = GeneratingFunction::bose(reduce_to_spectrum(&mu, &t).unwrap(), cells as f64).unwrap();
        let exact = g.eval_real(xi).unwrap().exp();
        assert!((m - exact).abs() < 5.0 * sd / (vals.len() as f64).sqrt(), "{m} vs {exact}");
    }
}
