//! Criterion benchmarks for the hot paths: distance certification,
//! encoder synthesis, exact low-weight enumeration, and Monte Carlo runs.

use criterion::{criterion_group, criterion_main, Criterion};

use distillery::circuits::encoder;
use distillery::enumerate::error_polynomial;
use distillery::inner::{library_code, verify_code};
use distillery::protocol::preset;
use distillery::simulate::{run, theta_of_epsilon, SimConfig};

fn bench_verify(c: &mut Criterion) {
    let code = library_code("17_1_5").unwrap();
    c.bench_function("verify_17_1_5", |b| {
        b.iter(|| {
            let report = verify_code(std::hint::black_box(&code));
            assert!(report.passed());
        })
    });
}

fn bench_encoder(c: &mut Criterion) {
    let code = library_code("16_6_4").unwrap();
    c.bench_function("encoder_16_6_4", |b| {
        b.iter(|| encoder(std::hint::black_box(&code)).unwrap())
    });
}

fn bench_enumerate(c: &mut Criterion) {
    let p = preset("7").unwrap();
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    g.bench_function("preset7_w3", |b| {
        b.iter(|| error_polynomial(std::hint::black_box(&p), 3).unwrap())
    });
    g.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let p = preset("7").unwrap();
    let theta = theta_of_epsilon(1e-2).unwrap();
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("preset7_100runs", |b| {
        b.iter(|| run(std::hint::black_box(&p), &SimConfig { theta, runs: 100, seed: 1 }).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_verify, bench_encoder, bench_enumerate, bench_simulate);
criterion_main!(benches);
