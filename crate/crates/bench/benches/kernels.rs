use std::hint::black_box;

use banach_splitting::resolvent::resolve;
use banach_splitting::{solve, Space};
use banach_splitting_bench::{budgets, sample_point, skew_instance};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const EXPONENTS: [f64; 3] = [1.25, 1.5, 2.0];

fn duality_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("duality_map");
    for n in [10, 200] {
        for p in EXPONENTS {
            let space = Space::new(n, p).unwrap();
            let x = sample_point(n);
            group.bench_with_input(BenchmarkId::new(format!("p={p}"), n), &x, |bch, x| {
                bch.iter(|| space.duality_map(black_box(x)))
            });
        }
    }
    group.finish();
}

fn resolvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolve");
    for n in [10, 200] {
        for p in EXPONENTS {
            let inst = skew_instance(n, p);
            let z = sample_point(n);
            group.bench_with_input(BenchmarkId::new(format!("p={p}"), n), &z, |bch, z| {
                bch.iter(|| resolve(inst.space(), inst.b(), 0.3, black_box(z)).unwrap())
            });
        }
    }
    group.finish();
}

fn iterations(c: &mut Criterion) {
    let mut group = c.benchmark_group("hundred_iterations");
    group.sample_size(20);
    for p in [1.5, 2.0] {
        let inst = skew_instance(20, p);
        let x1 = sample_point(20);
        for (name, config) in budgets(&inst, 100) {
            group.bench_function(BenchmarkId::new(name, format!("p={p}")), |bch| {
                bch.iter(|| solve(&inst, &config, black_box(&x1)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, duality_map, resolvent, iterations);
criterion_main!(benches);
