use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use photocount::ensembles::haar_average_fano;
use photocount::montecarlo::{sample_counts, McConfig};
use photocount::pmf::{invert_fourier, saddle_point};
use photocount::{DoubleBarrierCgf, GeneratingFunction, ModeCovariance, SpectralData, TransmissionSpec};

fn spectrum(modes: usize) -> SpectralData {
    SpectralData::new((0..modes).map(|k| 0.2 + 1.8 * k as f64 / modes as f64).collect()).unwrap()
}

fn fourier(c: &mut Criterion) {
    let mut group = c.benchmark_group("invert_fourier");
    for mean in [1e2, 1e3, 1e4] {
        let g = DoubleBarrierCgf::new(8.0, mean / 8.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(mean), &g, |b, g| {
            b.iter(|| invert_fourier(g, 0).unwrap())
        });
    }
    let g = GeneratingFunction::bose(spectrum(64), 10.0).unwrap();
    group.bench_function("bose_64_modes", |b| b.iter(|| invert_fourier(&g, 0).unwrap()));
    group.finish();
}

fn saddle(c: &mut Criterion) {
    let g = GeneratingFunction::bose(spectrum(64), 10.0).unwrap();
    c.bench_function("saddle_point", |b| b.iter(|| saddle_point(&g, black_box(900)).unwrap()));
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_counts");
    group.sample_size(10);
    let mu = ModeCovariance::scalar(1.0, 32);
    let t = TransmissionSpec::Eigenvalues(vec![0.5; 32]);
    for cells in [1, 16] {
        let cfg = McConfig::new(cells, 20_000, 7).unwrap();
        group.bench_with_input(BenchmarkId::new("diagonal_32", cells), &cfg, |b, cfg| {
            b.iter(|| sample_counts(&mu, &t, cfg).unwrap())
        });
    }
    group.finish();
}

fn haar(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar_average_fano");
    group.sample_size(10);
    let mu: Vec<f64> = (0..32).map(|k| 1.0 + k as f64 / 8.0).collect();
    let tau = vec![0.3; 32];
    group.bench_function("32_modes", |b| b.iter(|| haar_average_fano(&mu, &tau, 200, 5).unwrap()));
    group.finish();
}

criterion_group!(benches, fourier, saddle, monte_carlo, haar);
criterion_main!(benches);
