mod common;

use photocount::pmf::{invert_fourier, saddle_point_log};
use photocount::{CountingCgf, DoubleBarrierCgf, GeneratingFunction, SpectralData};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn central_limit_at_many_cells() {
    // ν = 10⁴ cells through N = 10 channels with Γ = 0.1, f = 8.
    let g = DoubleBarrierCgf::new(8.0, 1e4 * 10.0 * 0.1).unwrap();
    let c = g.cumulants();
    let dist = invert_fourier(&g, 0).unwrap();
    let d = dist.kolmogorov_to_normal(c.mean, c.variance.sqrt(), 4.0);
    assert!(d <= 0.01, "{d}");
}

#[test]
fn saddle_point_on_random_matrix_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let inst = common::random_instance(&mut rng, 6, 1, 3.0);
    let cells = 150.0 / inst.spectrum.sum();
    let g = GeneratingFunction::bose(inst.spectrum, cells).unwrap();
    let mean = g.cumulants().mean;
    let exact = invert_fourier(&g, (5.0 * mean) as usize + 1).unwrap();
    for n in (0.2 * mean).ceil() as u64..=(5.0 * mean) as u64 {
        let s = saddle_point_log(&g, n).unwrap();
        let rel = (s - exact.log_p()[n as usize]).exp() - 1.0;
        assert!(rel.abs() <= 0.05, "n = {n}: {rel}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_pmf_is_a_distribution(
        lambdas in prop::collection::vec(0.0..4.0f64, 1..6),
        cells in 0.5..8.0f64,
    ) {
        let spectrum = SpectralData::new(lambdas).unwrap();
        prop_assume!(!spectrum.is_zero());
        let g = GeneratingFunction::bose(spectrum, cells).unwrap();
        let dist = invert_fourier(&g, 0).unwrap();
        let d = dist.diagnostics();
        prop_assert!(dist.p().iter().all(|&p| p >= 0.0));
        let total = dist.total();
        prop_assert!(total >= 1.0 - d.truncated_tail_mass_bound - 1e-9);
        prop_assert!(total <= 1.0 + 1e-9);
        let c = g.cumulants();
        prop_assert!((dist.mean() - c.mean).abs() <= 1e-6 * c.mean);
        prop_assert!((dist.variance() - c.variance).abs() <= 1e-6 * c.variance);
    }

    #[test]
    fn fermi_pmf_is_a_distribution(
        ts in prop::collection::vec(0.0..1.0f64, 1..6),
        cells in 1u32..6,
    ) {
        let spectrum = SpectralData::new(ts).unwrap();
        prop_assume!(!spectrum.is_zero());
        let g = GeneratingFunction::fermi(spectrum, cells as f64).unwrap();
        let dist = invert_fourier(&g, 0).unwrap();
        prop_assert!((dist.total() - 1.0).abs() <= 1e-9);
        let c = g.cumulants();
        prop_assert!((dist.mean() - c.mean).abs() <= 1e-6 * c.mean.max(1e-3));
    }
}
