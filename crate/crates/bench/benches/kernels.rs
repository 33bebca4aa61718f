use std::hint::black_box;

use boussinesq_bench::{bump, k_interior};
use boussinesq_ist::evolution::{evolve, EvolutionOptions};
use boussinesq_ist::fredholm::{fredholm_det, solve_m, NystromOptions};
use boussinesq_ist::scattering::{r1_at, scattering, VolterraOptions};
use boussinesq_ist::zero::laurent_heads;
use boussinesq_ist::C64;
use criterion::{criterion_group, criterion_main, Criterion};

fn volterra(c: &mut Criterion) {
    let d = bump();
    let vo = VolterraOptions::default();
    c.bench_function("scattering_matrix", |b| b.iter(|| scattering(&d, black_box(k_interior()), &vo).unwrap()));
    c.bench_function("r1_small_k", |b| b.iter(|| r1_at(&d, black_box(C64::new(0.3, 0.0)), &vo).unwrap()));
}

fn nystrom(c: &mut Criterion) {
    let d = bump();
    let no = NystromOptions::default();
    let mut g = c.benchmark_group("nystrom");
    g.sample_size(20);
    g.bench_function("solve_m", |b| b.iter(|| solve_m(&d, 1, 0.2, black_box(k_interior()), &no).unwrap()));
    g.bench_function("fredholm_det", |b| b.iter(|| fredholm_det(&d, 1, 2, black_box(k_interior()), &no).unwrap()));
    g.finish();
}

fn slow(c: &mut Criterion) {
    let d = bump();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("laurent_heads", |b| b.iter(|| laurent_heads(black_box(&d)).unwrap()));
    let opts = EvolutionOptions { n: 2048, l: 20.0, ..Default::default() };
    g.bench_function("evolve_t0.01", |b| b.iter(|| evolve(&d, &[0.01], &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, volterra, nystrom, slow);
criterion_main!(benches);
