use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use representer_core::admissibility::{check_radial_face_monotone, check_tangential_bound, default_radii};
use representer_core::certificates::{certify_exact, counterexample_functional, run_counterexample};
use representer_core::par::{self, Execution};
use representer_core::regularizer::RegularizerSpec;
use representer_core::spaces::{DualFunctional, PrimalVector, SpaceSpec};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn counterexample_table(c: &mut Criterion) {
    let ns: Vec<usize> = (1..=64).map(|k| 16 * k).collect();
    let mut g = c.benchmark_group("counterexample_table");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_counterexample(black_box(&ns), exec).unwrap())
        });
    }
    g.finish();
}

fn certify_batch(c: &mut Criterion) {
    let space = SpaceSpec::SequenceL1;
    let ls = vec![counterexample_functional(), DualFunctional::finite(vec![1.0, -1.0, 0.5])];
    let points: Vec<PrimalVector> = (1..=128)
        .map(|k| PrimalVector::new(vec![(k, 1.0), (k + 3, -0.5 / k as f64)]).unwrap())
        .collect();
    let mut g = c.benchmark_group("certify_batch");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::map_slice(exec, &points, |f| certify_exact(f, &ls, &space, 1e-8).unwrap().distance()))
        });
    }
    g.finish();
}

fn admissibility_sampling(c: &mut Criterion) {
    let space = SpaceSpec::finite(1.5, 4).unwrap();
    let omega = RegularizerSpec::norm();
    let radii = default_radii();
    let mut g = c.benchmark_group("admissibility_sampling");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("tangential", name), |b| {
            b.iter(|| check_tangential_bound(&omega, &space, 400, 1, 1e-9, exec))
        });
        g.bench_function(BenchmarkId::new("radial", name), |b| {
            b.iter(|| check_radial_face_monotone(&omega, &space, 8, &radii, 1, 1e-9, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, counterexample_table, certify_batch, admissibility_sampling);
criterion_main!(benches);
