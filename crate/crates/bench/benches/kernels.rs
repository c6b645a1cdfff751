use std::hint::black_box;

use aqc_bench::{couplings, uniform_state};
use aqc_core::{
    apply_hamiltonian, build_initial, eigensystem, evolve, final_energies, find_min_gap, interpolate, EvolveOptions,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn bench_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_hamiltonian");
    for n in [4usize, 8, 12] {
        let cv = couplings(n, 1);
        let f = final_energies(&cv);
        let psi = uniform_state(n);
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << n];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| apply_hamiltonian(&f, black_box(0.37), psi.amplitudes(), &mut out).unwrap())
        });
    }
    group.finish();
}

fn bench_eigensystem(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensystem");
    for n in [2usize, 4, 5] {
        let cv = couplings(n, 2);
        let h = interpolate(&build_initial(n).unwrap(), &final_energies(&cv), 0.5).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| eigensystem(black_box(&h)).unwrap()));
    }
    group.finish();
}

fn bench_min_gap(c: &mut Criterion) {
    let cv = couplings(2, 3);
    c.bench_function("find_min_gap/n2", |b| b.iter(|| find_min_gap(black_box(&cv), 1001, 1e-8).unwrap()));
}

fn bench_evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    group.sample_size(20);
    let opts = EvolveOptions::default();
    for (n, t) in [(2usize, 5.0), (2, 40.0), (3, 40.0)] {
        let cv = couplings(n, 4);
        group.bench_function(format!("n{n}_T{t}"), |b| b.iter(|| evolve(black_box(&cv), t, &opts, &[]).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_apply, bench_eigensystem, bench_min_gap, bench_evolve);
criterion_main!(benches);
