//! Double-exponential (tanh-sinh) quadrature on a finite interval.
//!
//! Integrable endpoint singularities such as `T^{-1/2}` or `(1 − T)^{-1/2}`
//! are handled without special treatment. The integrand receives the abscissa
//! together with its exact distances to both endpoints, so that factors like
//! `(1 − T)` can be evaluated without cancellation.

use std::f64::consts::FRAC_PI_2;

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evaluations: usize,
}

const T_MAX: f64 = 6.5;

// Abscissae closer than this to an endpoint are dropped, which keeps
// products like `T·√T` from underflowing. The neglected mass of an
// integrable `x^{-1/2}` singularity is ~1e-75.
const MIN_DISTANCE: f64 = 1e-150;
const MAX_LEVEL: u32 = 14;

/// Integrates `f(x, x − a, b − x)` over `[a, b]` to relative tolerance `tol`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> Quadrature
where
    F: Fn(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut evaluations = 0usize;

    // Contribution of the abscissa pair ±t (the centre counted once).
    let mut node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // 1 − tanh u = 2 / (e^{2u} + 1), exact near the endpoint.
        let near = half * 2.0 / ((2.0 * u).exp() + 1.0);
        let far = 2.0 * half - near;
        let mut acc = 0.0;
        if t == 0.0 {
            evaluations += 1;
            return w * f(mid, half, half);
        }
        if near > MIN_DISTANCE {
            evaluations += 2;
            acc += f(b - near, far, near);
            acc += f(a + near, near, far);
        }
        w * acc
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        sum += node(k as f64 * h);
        k += 1;
    }
    let mut estimate = h * sum;
    let mut error = f64::INFINITY;

    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        // Only odd multiples of the new step are new points.
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            sum += node(k as f64 * h);
            k += 2;
        }
        let next = h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if error <= tol * estimate.abs() {
            break;
        }
    }

    Quadrature {
        value: estimate,
        error,
        evaluations,
    }
}
