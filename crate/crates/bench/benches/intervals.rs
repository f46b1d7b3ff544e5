use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppi_bench::fixture;
use ppi_core::{
    classical_interval, optimize_risk_split, suresim_interval, wsr_interval, SignificanceLevel,
    WsrConfig, WsrOptions, WsrState,
};

fn alpha() -> SignificanceLevel {
    SignificanceLevel::new(0.1).unwrap()
}

fn wsr(c: &mut Criterion) {
    let mut group = c.benchmark_group("wsr");
    for n in [100usize, 1_000, 10_000] {
        let (paired, _) = fixture(0.5, n, 0, 1);
        let y = paired.real_scores();
        let cfg = WsrConfig::unit();
        group.bench_with_input(BenchmarkId::new("bisection", n), &y, |b, y| {
            b.iter(|| wsr_interval(black_box(y), alpha(), &cfg).unwrap())
        });
        if n <= 1_000 {
            group.bench_with_input(BenchmarkId::new("streaming", n), &y, |b, y| {
                b.iter(|| {
                    let mut s = WsrState::new(y.len(), alpha(), cfg).unwrap();
                    for &x in y {
                        s.push(x).unwrap();
                    }
                    s.finish().unwrap()
                })
            });
        }
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let opts = WsrOptions::default();
    let mut group = c.benchmark_group("estimators");
    for cap_n in [2_000usize, 10_000] {
        let (paired, sim) = fixture(0.97, 100, cap_n, 2);
        group.bench_function(BenchmarkId::new("suresim", cap_n), |b| {
            b.iter(|| {
                suresim_interval(black_box(&paired), black_box(&sim), alpha(), &opts).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("optimize_split", cap_n), |b| {
            b.iter(|| optimize_risk_split(&paired, &sim, alpha(), &opts).unwrap())
        });
    }
    let (paired, _) = fixture(0.97, 100, 0, 3);
    let y = paired.real_scores();
    group.bench_function("classical/100", |b| {
        b.iter(|| classical_interval(black_box(&y), alpha(), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, wsr, estimators);
criterion_main!(benches);
