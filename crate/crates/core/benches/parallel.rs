//! Sequential against rayon execution for the data-parallel kernels.
//! Build without default features to see the sequential fallback alone.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qsource::aep::{typical_split_with, AepParams};
use qsource::certify::{certify_grid, grid};
use qsource::measurement::{cylinder_measure_by_transfer, cylinder_measure_with, sample_messages_with};
use qsource::{DensityMatrix, Execution, Pom, SourceFamily};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
    let pom = Pom::computational(2);
    let mut g = c.benchmark_group("sample_messages");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_messages_with(&f, &pom, 500, 200, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn certificates(c: &mut Criterion) {
    let points = grid(&[-0.3, 0.0, 0.3], &[-0.03, 0.03], &[-0.03, 0.03]);
    let mut g = c.benchmark_group("certify_grid");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| certify_grid(black_box(&points), 5, exec))
        });
    }
    g.finish();
}

fn measures(c: &mut Criterion) {
    let f = SourceFamily::pauli_r(0.3, 0.05, 0.05).unwrap();
    let pom = Pom::computational(2);
    let mut g = c.benchmark_group("cylinder_measure");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cylinder_measure_with(&f, &pom, 8, exec).unwrap())
        });
    }
    g.finish();
}

fn typical_sets(c: &mut Criterion) {
    let f = SourceFamily::bernoulli(DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap());
    let pom = Pom::eigenbasis(f.rho()).unwrap();
    let m = cylinder_measure_by_transfer(&f, &pom, 18).unwrap();
    let params = AepParams::new(18, 0.1, 0.5, 0.562335).unwrap();
    let mut g = c.benchmark_group("typical_split");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| typical_split_with(black_box(&m), &params, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, certificates, measures, typical_sets);
criterion_main!(benches);
