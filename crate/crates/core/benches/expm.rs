use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hamlearn::hamiltonian::random_hamiltonian;
use hamlearn::linalg::{expm_taylor, expm_taylor_scaled, expm_unitary, DEFAULT_TAYLOR_TERMS};

fn exponentials(c: &mut Criterion) {
    let mut group = c.benchmark_group("expm");
    for n in [2usize, 4, 8, 16, 32] {
        let h = random_hamiltonian(n, 1.0, n as u64).unwrap().to_matrix();
        let t = 0.785;
        group.bench_with_input(BenchmarkId::new("eigen", n), &h, |b, h| {
            b.iter(|| expm_unitary(black_box(h), t).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("taylor_scaled", n), &h, |b, h| {
            b.iter(|| expm_taylor_scaled(black_box(h), t, DEFAULT_TAYLOR_TERMS).unwrap())
        });
        if n <= 8 {
            group.bench_with_input(BenchmarkId::new("taylor", n), &h, |b, h| {
                b.iter(|| expm_taylor(black_box(h), t, DEFAULT_TAYLOR_TERMS).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, exponentials);
criterion_main!(benches);
