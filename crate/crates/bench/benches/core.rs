use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use linkpc_bench::{neighbor_ptx, scenario};
use linkpc_core::clustering::{calc_priority, scaled_backoff_wait};
use linkpc_core::config::Strategy;
use linkpc_core::net::{compute_etx, compute_ptx, tx_energy, NetworkGraph, Position, RadioParams};
use linkpc_core::sim::run_scenario;

fn formulas(c: &mut Criterion) {
    let rp = RadioParams::default();
    c.bench_function("tx_energy", |b| b.iter(|| tx_energy(black_box(1000), black_box(42.0), &rp)));
    c.bench_function("etx_ptx", |b| {
        b.iter(|| {
            let etx = compute_etx(black_box(0.8), black_box(0.9)).unwrap();
            compute_ptx(black_box(0.4), etx, black_box(5.9e-5)).unwrap()
        })
    });
}

fn priority(c: &mut Criterion) {
    let mut g = c.benchmark_group("calc_priority");
    for n in [4, 20, 100] {
        let set = neighbor_ptx(n, 10.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, s| b.iter(|| calc_priority(black_box(s), 10.0)));
    }
    g.finish();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("scaled_backoff_wait", |b| {
        b.iter(|| scaled_backoff_wait(black_box(4321.0), 0.01, 2e6, &mut rng).unwrap())
    });
}

fn graph(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<Position> = (0..500)
        .map(|_| {
            use rand::Rng;
            Position::new(rng.random_range(0.0..400.0), rng.random_range(0.0..400.0))
        })
        .collect();
    c.bench_function("build_graph_500", |b| b.iter(|| NetworkGraph::from_positions(black_box(&pts), 30.0).unwrap()));
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_scenario_60s");
    g.sample_size(10);
    for strategy in [Strategy::LinkPtx, Strategy::Gpsr] {
        let cfg = scenario(100, strategy);
        g.bench_with_input(BenchmarkId::from_parameter(strategy), &cfg, |b, cfg| b.iter(|| run_scenario(cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, formulas, priority, graph, simulate);
criterion_main!(benches);
