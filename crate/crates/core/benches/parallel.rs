use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kakeya_core::configs::{random, ConfigSpec};
use kakeya_core::discrete_kakeya::{ratio_table, small_group_suite, DEFAULT_BUDGET};
use kakeya_core::euclid::{needle_area_with, NeedleOptions};
use kakeya_core::topo_zero::{map_degree, tangent_zero_s2, S2Options};
use kakeya_core::Execution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn needle_area(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = random::trig(&mut rng, 6, 1.0, true);
    let mut group = c.benchmark_group("needle_area");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = NeedleOptions { length: 2.0, samples: 20_000, seed: 3, exec, ..NeedleOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| needle_area_with(&spec, opts).unwrap());
        });
    }
    group.finish();
}

fn sphere_zero(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = random::polynomial(&mut rng, 3, 3, 1.0, false);
    let mut group = c.benchmark_group("tangent_zero_s2");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = S2Options { exec, ..S2Options::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| tangent_zero_s2(&spec, opts));
        });
    }
    group.finish();
}

fn degree(c: &mut Criterion) {
    let spec = ConfigSpec::identity(3);
    let mut group = c.benchmark_group("map_degree_depth6");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| map_degree(&spec, 6, exec).unwrap());
        });
    }
    group.finish();
}

fn ratios(c: &mut Criterion) {
    let suite = small_group_suite();
    let mut group = c.benchmark_group("ratio_table");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| ratio_table(&suite, DEFAULT_BUDGET, exec).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, needle_area, sphere_zero, degree, ratios);
criterion_main!(benches);
