use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbp_core::dynamics::{Couplings, Stepper};
use sbp_core::par;
use sbp_core::verify::random_smooth_field;
use sbp_core::GridSpec;

fn reductions(c: &mut Criterion) {
    let mut group = c.benchmark_group("sum");
    for len in [1usize << 16, 1 << 20] {
        let data: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
        group.bench_with_input(BenchmarkId::new("sequential", len), &data, |b, d| {
            b.iter(|| par::sequential::sum(d.len(), |i| d[i] * d[i]))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", len), &data, |b, d| {
            b.iter(|| par::parallel::sum(d.len(), |i| d[i] * d[i]))
        });
    }
    group.finish();
}

fn phase_update(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase");
    for len in [1usize << 16, 1 << 20] {
        let v: Vec<f64> = (0..len).map(|i| 1e-3 * i as f64).collect();
        let mut u = vec![Complex64::new(1.0, 0.0); len];
        group.bench_function(BenchmarkId::new("sequential", len), |b| {
            b.iter(|| par::sequential::update(&mut u, |i, z| *z *= Complex64::from_polar(1.0, -v[i])))
        });
        #[cfg(feature = "parallel")]
        group.bench_function(BenchmarkId::new("parallel", len), |b| {
            b.iter(|| par::parallel::update(&mut u, |i, z| *z *= Complex64::from_polar(1.0, -v[i])))
        });
    }
    group.finish();
}

fn strang_step(c: &mut Criterion) {
    let backend = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };
    let mut group = c.benchmark_group("strang_step");
    group.sample_size(10);
    for (dim, n, l) in [(2usize, 256usize, 64.0), (3, 64, 32.0)] {
        let g = GridSpec::new(dim, n, l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut u = random_smooth_field(&g, &mut rng, 3);
        let stepper = Stepper::new(g, 0.01, Couplings::FULL, 2).unwrap();
        group.bench_function(BenchmarkId::new(backend, format!("{dim}d-{n}")), |b| {
            b.iter(|| stepper.step(&mut u).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, reductions, phase_update, strang_step);
criterion_main!(benches);
