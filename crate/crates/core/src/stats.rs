//! Small statistical helpers shared by the Monte Carlo oracle and the tests:
//! block jackknife, chi-square goodness of fit, Kolmogorov distance.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Number of jackknife blocks used throughout.
pub const JACKKNIFE_BLOCKS: usize = 50;

/// Jackknife standard error from leave-one-block-out estimates.
pub fn jackknife_error(leave_one_out: &[f64]) -> f64 {
    let b = leave_one_out.len();
    if b < 2 {
        return f64::NAN;
    }
    let mean = leave_one_out.iter().sum::<f64>() / b as f64;
    let ss: f64 = leave_one_out.iter().map(|v| (v - mean).powi(2)).sum();
    ((b as f64 - 1.0) / b as f64 * ss).sqrt()
}

/// Splits `0..len` into `blocks` contiguous ranges of near-equal size.
pub fn block_ranges(len: usize, blocks: usize) -> Vec<std::ops::Range<usize>> {
    let blocks = blocks.min(len).max(1);
    (0..blocks)
        .map(|b| (b * len / blocks)..((b + 1) * len / blocks))
        .collect()
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Chi-square test of an observed histogram against model probabilities.
///
/// `observed[n]` counts outcomes equal to `n`; outcomes beyond the histogram
/// go in `overflow`. `expected[n]` is the model probability of `n`; the model
/// mass not covered by `expected` is assigned to the last pooled bin. Bins are
/// pooled left to right until each carries an expected count of at least
/// `min_expected`.
pub fn chi_square(
    observed: &[u64],
    overflow: u64,
    expected: &[f64],
    min_expected: f64,
) -> ChiSquareTest {
    let trials = observed.iter().sum::<u64>() + overflow;
    let total = trials as f64;
    let len = observed.len().max(expected.len());

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut covered = 0.0;
    for n in 0..len {
        let p = expected.get(n).copied().unwrap_or(0.0).max(0.0);
        covered += p;
        obs += observed.get(n).copied().unwrap_or(0) as f64;
        exp += total * p;
        if exp >= min_expected {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    obs += overflow as f64;
    exp += total * (1.0 - covered).max(0.0);
    match bins.last_mut() {
        Some(last) if exp < min_expected => {
            last.0 += obs;
            last.1 += exp;
        }
        _ => bins.push((obs, exp)),
    }

    let statistic: f64 = bins
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive dof");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// `sup_x |F_empirical(x) − F(x)|` for a sorted sample of a continuous law.
pub fn kolmogorov_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_means_is_standard_error() {
        // Leave-one-out means of a block sample reproduce s/√B.
        let data: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = data.len() as f64;
        let total: f64 = data.iter().sum();
        let loo: Vec<f64> = data.iter().map(|x| (total - x) / (b - 1.0)).collect();
        let mean = total / b;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
        assert!((jackknife_error(&loo) - (var / b).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn block_ranges_cover_everything() {
        let r = block_ranges(103, 50);
        assert_eq!(r.len(), 50);
        assert_eq!(r[0].start, 0);
        assert_eq!(r.last().unwrap().end, 103);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!(block_ranges(7, 50).len(), 7);
    }

    #[test]
    fn perfect_fit_has_zero_statistic() {
        let expected = [0.25, 0.5, 0.25];
        let t = chi_square(&[250, 500, 250], 0, &expected, 5.0);
        assert!(t.statistic.abs() < 1e-12);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gross_misfit_is_rejected() {
        let t = chi_square(&[900, 100], 0, &[0.5, 0.5], 5.0);
        assert!(!t.passes(0.01));
    }

    #[test]
    fn sparse_tail_is_pooled() {
        let expected = [0.5, 0.3, 0.15, 0.04, 0.009, 0.001];
        let t = chi_square(&[50, 30, 15, 4, 1, 0], 0, &expected, 5.0);
        // 50 | 30 | 15 | 4+1+0+rest
        assert_eq!(t.dof, 3);
    }

    #[test]
    fn kolmogorov_of_exact_quantiles_is_small() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = kolmogorov_distance(&sample, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }
}
