//! Benchmarks for the three hot paths of a descent step: the FFT convolution,
//! assembling the gauge triple, and the manifold projection.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use css_core::functional::project_to_manifold;
use css_core::gauge::gauge_fields;
use css_core::grid::{convolve_free, make_grid, Field2D};
use css_core::NonlinearitySpec;
use num_complex::Complex64;
use std::hint::black_box;

fn bump(n: usize) -> Field2D {
    let grid = make_grid(8.0, n).unwrap();
    Field2D::from_fn(grid, |x, y| 0.8 * (-(x * x + y * y)).exp())
}

fn bench_convolve_free(c: &mut Criterion) {
    let mut g = c.benchmark_group("convolve_free");
    for n in [64usize, 128, 256] {
        let u = bump(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| {
                convolve_free(black_box(u), |kx, ky| {
                    let k2 = kx * kx + ky * ky;
                    Complex64::new(1.0 / (1.0 + k2), 0.0)
                })
            })
        });
    }
    g.finish();
}

fn bench_gauge_fields(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauge_fields");
    for n in [64usize, 128, 256] {
        let u = bump(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| gauge_fields(black_box(u)).unwrap())
        });
    }
    g.finish();
}

fn bench_project_to_manifold(c: &mut Criterion) {
    let spec = NonlinearitySpec::pure_power(6.0);
    let mut g = c.benchmark_group("project_to_manifold");
    for n in [64usize, 128] {
        let u = bump(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| project_to_manifold(black_box(u), &spec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_convolve_free, bench_gauge_fields, bench_project_to_manifold);
criterion_main!(benches);
