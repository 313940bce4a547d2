use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use vdc_core::expsum::{c0_sweep, reduced_sum, reduced_sums_all};
use vdc_core::kernels::build_surrogate;
use vdc_core::oracles::max_diff_avoiding;
use vdc_core::witness::scan_min;
use vdc_core::{AveragingScheme, OddIntPolynomial};

fn cube() -> OddIntPolynomial {
    OddIntPolynomial::new(&[0, 0, 1]).unwrap()
}

fn expsum(c: &mut Criterion) {
    let f = cube();
    let mut g = c.benchmark_group("expsum");
    g.bench_function("reduced_sum q=9973", |b| b.iter(|| reduced_sum(&f, 1, black_box(17), 9973)));
    g.bench_function("all residues q=9973", |b| b.iter(|| reduced_sums_all(&f, 1, black_box(9973))));
    g.sample_size(10);
    g.bench_function("c0 sweep q<=1000", |b| b.iter(|| c0_sweep(&f, black_box(1000))));
    g.finish();
}

fn eval_grid(c: &mut Criterion) {
    let g1 = build_surrogate(&cube(), 1_000_000, 1).unwrap();
    let mut g = c.benchmark_group("eval_grid");
    g.bench_function("surrogate n=1e6, 2^16 points", |b| b.iter(|| g1.eval_grid(black_box(1 << 16))));
    g.sample_size(10);
    g.bench_function("scan n=1e6, 2^20 points", |b| b.iter(|| scan_min(&g1, black_box(1 << 20), 60)));
    g.finish();
}

fn verify(c: &mut Criterion) {
    let scheme = AveragingScheme::build(0.5, &cube(), 2.86, 24).unwrap();
    let mut g = c.benchmark_group("averaging");
    g.sample_size(10);
    g.bench_function("verify delta=0.5 q<=1e5", |b| b.iter(|| scheme.verify(black_box(100_000))));
    g.finish();
}

fn diffset(c: &mut Criterion) {
    let f = cube();
    let mut g = c.benchmark_group("diffset");
    g.sample_size(10);
    g.bench_function("x^3 N=40", |b| b.iter(|| max_diff_avoiding(&f, black_box(40), 64)));
    g.finish();
}

criterion_group!(benches, expsum, eval_grid, verify, diffset);
criterion_main!(benches);
