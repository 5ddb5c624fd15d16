use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use glbulk::energy::{gl_energy, gl_gradient};
use glbulk::{
    build_f, minimize_reduced, GLParams, Grid2D, MagneticProfile, MinimizeOptions, Resolution,
};
use glbulk_bench::fixture;

fn energy(c: &mut Criterion) {
    let p = GLParams::new(16.0, 8.0).unwrap();
    let (psi, a, b0) = fixture(129, &p);
    c.bench_function("gl_energy 129x129", |b| {
        b.iter(|| gl_energy(black_box(&psi), &a, &p, &b0).unwrap())
    });
    c.bench_function("gl_gradient 129x129", |b| {
        b.iter(|| gl_gradient(black_box(&psi), &a, &p, &b0).unwrap())
    });
}

fn potential(c: &mut Criterion) {
    let g = Grid2D::new([0.0, 0.0], 1.0, 1.0, 129, 129).unwrap();
    let b0 = MagneticProfile::linear(1.0, -0.5);
    c.bench_function("build_f 129x129", |b| {
        b.iter(|| build_f(black_box(&b0), &g).unwrap())
    });
}

fn reduced(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduced");
    group.sample_size(10);
    let opts = MinimizeOptions::reduced();
    group.bench_function("minimize_reduced b=0.5 R=8", |b| {
        b.iter(|| {
            minimize_reduced(black_box(0.5), 1, 8.0, Resolution::Spacing(0.25), &opts).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, energy, potential, reduced);
criterion_main!(benches);
