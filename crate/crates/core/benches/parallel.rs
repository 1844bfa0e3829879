//! Parallel core against a one-worker pool on the same code path.
//! Build with `--no-default-features` for the plain sequential loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use swe_lab::exec;
use swe_lab::lil::{propagation_experiment, PropagationConfig};
use swe_lab::riesz::make_params;
use swe_lab::sampler::{assemble_covariance, GridSampler, GridSpec};

fn pools() -> [(&'static str, Option<usize>); 2] {
    [("one_thread", Some(1)), ("default_pool", None)]
}

fn covariance_assembly(c: &mut Criterion) {
    let p = make_params(0.5).unwrap();
    let axis: Vec<f64> = (1..=16).map(|k| k as f64 / 8.0).collect();
    let grid = GridSpec::new(axis.clone(), axis, None).unwrap();
    let mut g = c.benchmark_group("assemble_covariance_256");
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec::with_threads(threads, || black_box(assemble_covariance(&p, &grid).unwrap())))
        });
    }
    g.finish();
}

fn replications(c: &mut Criterion) {
    let p = make_params(0.5).unwrap();
    let grid = GridSpec::new(vec![0.5, 1.0, 1.5, 2.0], (1..=64).map(|k| k as f64 / 32.0).collect(), None).unwrap();
    let sampler = GridSampler::new(&p, grid, 1e-8).unwrap();
    let mut g = c.benchmark_group("sample_256_points_x_1000");
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec::with_threads(threads, || black_box(sampler.sample(1, 1000).unwrap())))
        });
    }
    g.finish();
}

fn propagation_runs(c: &mut Criterion) {
    let p = make_params(0.5).unwrap();
    let cfg = PropagationConfig { seed: 3, n_runs: 4, grid_bits: 12, ..Default::default() };
    let mut g = c.benchmark_group("propagation_4_runs");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec::with_threads(threads, || black_box(propagation_experiment(&p, 1.0, &cfg).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, covariance_assembly, replications, propagation_runs);
criterion_main!(benches);
