use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sieve_bench::{kernel, measures};
use sieve_core::StationaryKernel;

fn moment_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_series");
    group.sample_size(10);
    for (name, m) in measures() {
        for n in [500usize, 2000] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| kernel(&m).moment_series(black_box(n)))
            });
        }
    }
    group.finish();
}

fn transition_row(c: &mut Criterion) {
    let mut group = c.benchmark_group("transition_row");
    for (name, m) in measures() {
        let k = kernel(&m);
        let mut row = Vec::new();
        group.bench_function(BenchmarkId::new(name, 1000), |b| {
            b.iter(|| k.transition_row(black_box(1000), &mut row))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_oracle");
    group.sample_size(10);
    for (name, m) in measures() {
        let k = kernel(&m);
        group.bench_function(BenchmarkId::new(name, 12), |b| {
            b.iter(|| k.enumerate_oracle(black_box(12)).unwrap())
        });
    }
    group.finish();
}

fn stationary(c: &mut Criterion) {
    let mut group = c.benchmark_group("stationary_visits");
    group.sample_size(10);
    for (name, m) in measures() {
        let st = StationaryKernel::new(kernel(&m)).unwrap();
        group.bench_function(BenchmarkId::new(name, 200), |b| {
            b.iter(|| st.stationary_visit_probabilities(black_box(200)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, moment_series, transition_row, oracle, stationary);
criterion_main!(benches);
