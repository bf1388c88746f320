use std::hint::black_box;

use bernstein_core::chain::analyze;
use bernstein_core::fixtures::counterexample_scan;
use bernstein_core::{build_bernstein_basis, build_operator, ExpSpace, Interval, SpaceElement, Spectrum, Tolerances};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn basis(c: &mut Criterion) {
    let iv = Interval::new(0.0, 1.0).unwrap();
    let mut group = c.benchmark_group("basis");
    for n in [2, 4, 8, 12] {
        let spec = Spectrum::polynomial(n).unwrap();
        group.bench_with_input(BenchmarkId::new("polynomial", n), &spec, |bench, s| {
            bench.iter(|| build_bernstein_basis(black_box(s), iv).unwrap())
        });
    }
    group.finish();
}

fn operator(c: &mut Criterion) {
    let iv = Interval::new(0.0, 1.0).unwrap();
    let spec = Spectrum::from_real_exponents(&[0.0, 0.5, 1.3, 2.7, 4.0]).unwrap();
    let space = ExpSpace::shared(spec.clone());
    let f0 = SpaceElement::one(&space).unwrap();
    let f1 = SpaceElement::exp(&space, 0.5).unwrap();
    c.bench_function("operator/exponential", |bench| {
        bench.iter(|| build_operator(black_box(&spec), iv, &f0, &f1).unwrap())
    });
    let op = build_operator(&spec, iv, &f0, &f1).unwrap();
    let xs = iv.grid(1001);
    c.bench_function("operator/apply_grid", |bench| {
        bench.iter(|| op.apply_grid(|t| t.sin(), black_box(&xs)))
    });
    c.bench_function("chain/analyze", |bench| {
        bench.iter(|| analyze(op.basis(), &f0, &f1, &Tolerances::default()).unwrap())
    });
}

fn scan(c: &mut Criterion) {
    let lo = 7.0 * std::f64::consts::PI / 4.0;
    let hi = 2.0 * std::f64::consts::PI - 0.01;
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("counterexample_50", |bench| {
        bench.iter(|| counterexample_scan(black_box(lo), hi, 50).unwrap())
    });
    group.finish();
}

criterion_group!(benches, basis, operator, scan);
criterion_main!(benches);
