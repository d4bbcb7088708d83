use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sieve_bench::{kernel, measures};
use sieve_core::sampler::{
    replicate_stream, sample_game, sample_renewal, sample_stationary, sample_stickbreak,
    sample_uncounted_cells,
};
use sieve_core::{MeasureSampler, StationaryInverse, StationaryKernel};

fn samplers(c: &mut Criterion) {
    let n = 1000;
    let mut group = c.benchmark_group("sample_composition");
    for (name, m) in measures() {
        let draws = MeasureSampler::new(&m);
        let offset = StationaryInverse::new(&StationaryKernel::new(kernel(&m)).unwrap()).unwrap();
        let mut rng = replicate_stream(1, 0);
        group.bench_function(BenchmarkId::new(format!("game/{name}"), n), |b| {
            b.iter(|| sample_game(&draws, black_box(n), &mut rng).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("stickbreak/{name}"), n), |b| {
            b.iter(|| sample_stickbreak(&draws, black_box(n), &mut rng).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("renewal/{name}"), n), |b| {
            b.iter(|| sample_renewal(&draws, black_box(n), &mut rng).unwrap())
        });
        group.bench_function(BenchmarkId::new(format!("stationary/{name}"), n), |b| {
            b.iter(|| sample_stationary(&draws, &offset, black_box(n), &mut rng).unwrap())
        });
    }
    group.finish();
}

fn uncounted_cells(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_uncounted_cells");
    for (name, m) in measures() {
        let draws = MeasureSampler::new(&m);
        let mut rng = replicate_stream(2, 0);
        for n in [1000usize, 100_000] {
            group.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| sample_uncounted_cells(&draws, black_box(n), &mut rng).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, samplers, uncounted_cells);
criterion_main!(benches);
