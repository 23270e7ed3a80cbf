//! Benchmarks for the three throughput-sensitive workloads: Monte Carlo
//! chain ensembles, likelihood-surface evaluation, and B92 protocol rounds.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use qrev_core::chain::{simulate_ensemble, ChainConfig};
use qrev_core::inference::{log_likelihood_surface, LikelihoodSpec, SurfaceGrid};
use qrev_core::qkd::{run_b92, B92Config, EveStrategy};
use qrev_core::{BlochAngles, CountRecord, PartialMeasurement, PureState};

fn chain_ensemble(c: &mut Criterion) {
    let pm = PartialMeasurement::new(0.2, 0.3).unwrap();
    let psi = PureState::from_angles(BlochAngles::new(1.0, 0.5).unwrap());
    let mut group = c.benchmark_group("chain_ensemble");
    for &trials in &[1_000u64, 10_000] {
        group.throughput(Throughput::Elements(trials));
        let cfg = ChainConfig::new(3, trials, 42).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(trials), &cfg, |b, cfg| {
            b.iter(|| simulate_ensemble(&pm, &psi, cfg).unwrap());
        });
    }
    group.finish();
}

fn likelihood_surface(c: &mut Criterion) {
    let pm = PartialMeasurement::new(0.2, 0.3).unwrap();
    let counts = CountRecord::new(56_000, 6_000);
    let grid = SurfaceGrid::uniform(100, 100).unwrap();
    let mut group = c.benchmark_group("likelihood_surface_100x100");
    for (label, spec) in [
        ("factors_on", LikelihoodSpec::with_reversal_factors()),
        ("factors_off", LikelihoodSpec::priors_only()),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| log_likelihood_surface(&pm, &counts, &grid, spec));
        });
    }
    group.finish();
}

fn b92_throughput(c: &mut Criterion) {
    let rounds = 10_000u64;
    let mut group = c.benchmark_group("b92");
    group.throughput(Throughput::Elements(rounds));
    for (label, eve) in [
        ("clean", EveStrategy::None),
        (
            "measure_reverse",
            EveStrategy::MeasureReverse {
                p: 0.3,
                q: 0.4,
                rounds: 2,
            },
        ),
    ] {
        let cfg = B92Config::new(rounds, 7, eve).unwrap();
        group.bench_function(label, |b| {
            b.iter(|| run_b92(&cfg).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, chain_ensemble, likelihood_surface, b92_throughput);
criterion_main!(benches);
