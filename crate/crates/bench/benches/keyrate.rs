use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cvqpon::estimation::{estimate_user, simulate_channel};
use cvqpon::keyrate::{KeyRateEngine, TrustPartition};
use cvqpon::network;
use cvqpon::protocols::{trusted_total_with, untrusted_total_with, TrustStrategy};
use cvqpon_bench::{experiment, experiment_engine, symmetric};

fn assembly(c: &mut Criterion) {
    let params = experiment();
    c.bench_function("assemble/8 users", |b| b.iter(|| network::assemble(black_box(&params)).unwrap()));
    let mut g = c.benchmark_group("assemble/symmetric");
    for n in [2, 8, 16, 32] {
        let p = symmetric(n).network().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| b.iter(|| network::assemble(p).unwrap()));
    }
    g.finish();
}

fn holevo(c: &mut Criterion) {
    let engine = experiment_engine();
    let untrusted = TrustPartition::untrusted(4);
    c.bench_function("holevo/untrusted", |b| b.iter(|| engine.holevo(black_box(&untrusted)).unwrap()));
    let trusted = TrustPartition::new(4, [0, 1, 2, 3, 5, 6, 7], 8).unwrap();
    c.bench_function("holevo/all trusted", |b| b.iter(|| engine.holevo(black_box(&trusted)).unwrap()));
}

fn protocols(c: &mut Criterion) {
    let engine = experiment_engine();
    let betas = cvqpon::presets::experiment_betas();
    c.bench_function("protocols/untrusted total", |b| b.iter(|| untrusted_total_with(&engine, &betas).unwrap()));
    c.bench_function("protocols/trusted total", |b| {
        b.iter(|| trusted_total_with(&engine, &betas, &TrustStrategy::DescendingUntrustedKey, None).unwrap())
    });
    let mut g = c.benchmark_group("protocols/sweep point");
    for n in [4, 16] {
        let p = symmetric(n).network().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| {
                let e = KeyRateEngine::new(p.clone()).unwrap();
                let betas = vec![0.95; n];
                let u = untrusted_total_with(&e, &betas).unwrap();
                trusted_total_with(&e, &betas, &TrustStrategy::DescendingUntrustedKey, Some(&u)).unwrap()
            })
        });
    }
    g.finish();
}

fn estimation(c: &mut Criterion) {
    let params = experiment();
    let mut g = c.benchmark_group("estimation");
    g.sample_size(10);
    g.bench_function("simulate 1e5", |b| b.iter(|| simulate_channel(&params, 100_000, 1).unwrap()));
    let batch = simulate_channel(&params, 100_000, 1).unwrap();
    g.bench_function("estimate user 1e5", |b| b.iter(|| estimate_user(&batch, 4, 6.5).unwrap()));
    g.finish();
}

criterion_group!(benches, assembly, holevo, protocols, estimation);
criterion_main!(benches);
