//! Random small problem instances shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DVector;
use photocount::ensembles::sample_haar_unitary;
use photocount::{reduce_to_spectrum, CMatrix, ModeCovariance, SpectralData, TransmissionSpec, C64};
use rand::Rng;
use rand_distr::StandardNormal;

/// A source, a passive scatterer and an integer cell count.
pub struct Instance {
    pub mu: ModeCovariance,
    pub t: TransmissionSpec,
    pub cells: u32,
    pub spectrum: SpectralData,
}

fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Wishart-type PSD covariance `G G† / N`.
pub fn random_covariance<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let mut m = &g * g.adjoint() / C64::new(n as f64, 0.0);
    // Exact hermiticity.
    m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    m
}

/// `U diag(√T) V` with Haar `U`, `V` and uniform transmissions.
pub fn random_passive<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let u = sample_haar_unitary(n, rng);
    let v = sample_haar_unitary(n, rng);
    let s = DVector::from_fn(n, |_, _| C64::new(rng.random::<f64>().sqrt(), 0.0));
    u * CMatrix::from_diagonal(&s) * v
}

/// Random instance with `N ≤ max_modes`, `cells ≤ max_cells` and the largest
/// eigenvalue of `t μ t†` rescaled to a uniform value in `(0.2, lambda_max]`.
pub fn random_instance<R: Rng>(rng: &mut R, max_modes: usize, max_cells: u32, lambda_max: f64) -> Instance {
    let n = rng.random_range(1..=max_modes);
    let cells = rng.random_range(1..=max_cells);
    let mu = random_covariance(n, rng);
    let t = random_passive(n, rng);
    let raw = reduce_to_spectrum(&ModeCovariance::Matrix(mu.clone()), &TransmissionSpec::Matrix(t.clone()))
        .expect("valid instance");
    let target = rng.random_range(0.2..=lambda_max);
    let scale = target / raw.max();
    let mu = ModeCovariance::Matrix(mu * C64::new(scale, 0.0));
    let t = TransmissionSpec::Matrix(t);
    let spectrum = reduce_to_spectrum(&mu, &t).expect("valid instance");
    Instance { mu, t, cells, spectrum }
}
