use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lapse_core::cartpole::{calibrate_moments, run_episodes, CartPoleConfig, LinearSignController};
use lapse_core::parallel::{map_sequential, seed_range};
use lapse_core::simengine::{run_trace, ThresholdRule};
use lapse_core::{PolicyKind, StationaryPolicy, SystemParams};
use std::hint::black_box;

const SLOTS: u64 = 20_000;

fn synthetic(c: &mut Criterion) {
    let params = SystemParams::standard_setup();
    let pi = StationaryPolicy::for_params(&params).unwrap();
    let rule = ThresholdRule::standard();
    let seeds = seed_range(1, 8);
    let trace = |s| run_trace(&params, PolicyKind::ContextLapseIndex, &pi, SLOTS, s, &rule).unwrap();

    let mut group = c.benchmark_group("synthetic_traces");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", seeds.len()), |b| {
        b.iter(|| black_box(map_sequential(&seeds, trace)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function(BenchmarkId::new("parallel", seeds.len()), |b| {
        b.iter(|| black_box(lapse_core::parallel::map_parallel(&seeds, trace)))
    });
    group.finish();
}

fn cartpole(c: &mut Criterion) {
    let ctl = LinearSignController::default();
    let cal = calibrate_moments(100, 7, 10.0, &ctl).unwrap();
    let config = CartPoleConfig::standard(cal.moments);
    let seeds = seed_range(1, 8);
    let run = |s| run_episodes(&config, PolicyKind::ContextLapseIndex, 200, s, &ctl).unwrap();

    let mut group = c.benchmark_group("cartpole_episodes");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", seeds.len()), |b| {
        b.iter(|| black_box(map_sequential(&seeds, run)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function(BenchmarkId::new("parallel", seeds.len()), |b| {
        b.iter(|| black_box(lapse_core::parallel::map_parallel(&seeds, run)))
    });
    group.finish();
}

criterion_group!(benches, synthetic, cartpole);
criterion_main!(benches);
