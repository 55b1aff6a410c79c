use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::hint::black_box;
use symrank::evalsel::synth_3var;
use symrank::stats::{kendall_tau, t0_divergence, t0_divergence_fast};
use symrank::symgen::{generate, OperatorSet};
use symrank::tree::best_split;

fn sample(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = StdRng::seed_from_u64(seed);
    let u: Vec<f64> = (0..n).map(|_| r.random()).collect();
    let y: Vec<f64> = u.iter().map(|v| v * v + 0.3 * r.random::<f64>()).collect();
    (u, y)
}

fn divergence(c: &mut Criterion) {
    let mut g = c.benchmark_group("t0");
    for n in [100usize, 1000, 4000] {
        let (u, y) = sample(n, n as u64);
        g.bench_with_input(BenchmarkId::new("fast", n), &n, |b, _| {
            b.iter(|| t0_divergence_fast(black_box(&u), black_box(&y)).unwrap())
        });
        if n <= 1000 {
            g.bench_with_input(BenchmarkId::new("reference", n), &n, |b, _| {
                b.iter(|| t0_divergence(black_box(&u), black_box(&y)).unwrap())
            });
        }
        g.bench_with_input(BenchmarkId::new("kendall", n), &n, |b, _| {
            b.iter(|| kendall_tau(black_box(&u), black_box(&y)).unwrap())
        });
    }
    g.finish();
}

fn splitting(c: &mut Criterion) {
    let mut g = c.benchmark_group("best_split");
    for (n, d) in [(500usize, 3usize), (500, 24), (5000, 24)] {
        let mut r = StdRng::seed_from_u64(7);
        let columns: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| r.random()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|i| columns[0][i] + 2.0 * columns[1 % d][i] + r.random::<f64>()).collect();
        let idx: Vec<usize> = (0..n).collect();
        g.bench_function(BenchmarkId::from_parameter(format!("{n}x{d}")), |b| {
            b.iter(|| best_split(black_box(&columns), black_box(&y), black_box(&idx)).unwrap())
        });
    }
    g.finish();
}

fn features(c: &mut Criterion) {
    let ds = synth_3var(500, 0.1, 1).unwrap();
    let ops = OperatorSet::standard();
    let mut g = c.benchmark_group("generate");
    for arch in ["bu", "ub"] {
        let a = arch.parse().unwrap();
        g.bench_function(arch, |b| b.iter(|| generate(black_box(&ds), &a, &ops, false).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, divergence, splitting, features);
criterion_main!(benches);
