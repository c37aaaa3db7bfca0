use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qkd_core::{curve, key_rate, optimize_mu, secure_distance, Protocol, SystemParams};

fn analytic(c: &mut Criterion) {
    let base = SystemParams::reference(0.0, 0.1);
    let at = SystemParams::reference(30.0, 0.1);

    c.bench_function("key_rate/qutrit", |b| {
        b.iter(|| key_rate(Protocol::Qutrit, black_box(&at)))
    });
    c.bench_function("optimize_mu/qutrit_30km", |b| {
        b.iter(|| optimize_mu(Protocol::Qutrit, black_box(&base), 30.0))
    });
    c.bench_function("secure_distance/bb84", |b| {
        b.iter(|| secure_distance(Protocol::Bb84, black_box(&base)))
    });

    let lengths: Vec<f64> = (0..=80).map(f64::from).collect();
    c.bench_function("curve/qutrit_0_80km", |b| {
        b.iter(|| curve(Protocol::Qutrit, &base, black_box(&lengths)))
    });
}

criterion_group!(benches, analytic);
criterion_main!(benches);
