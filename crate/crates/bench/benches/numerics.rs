use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hstab_bench::two_bubbles;
use hstab_core::bubbles::{calibrate_c0, sample_points, AxisBubble};
use hstab_core::fields::sample_f;
use hstab_core::fitter::{fit_bubbles, FitOptions};
use hstab_core::interactions::pair_integral;
use hstab_core::quadrature::QuadratureOptions;
use hstab_core::solver::{dminus1_norm, solve_rho, RhoOptions, SolverConfig};
use hstab_core::{compose, hnorm, Dim};

fn group(c: &mut Criterion) {
    let d = Dim::new(2).unwrap();
    let pts = sample_points(d, 64, 1.0, 1);
    c.bench_function("compose_and_norm_64", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for w in pts.windows(2) {
                acc += hnorm(&compose(&w[0], &w[1]).unwrap());
            }
            black_box(acc)
        })
    });
}

fn quadrature(c: &mut Criterion) {
    let k = calibrate_c0(Dim::new(1).unwrap()).unwrap();
    let opts = QuadratureOptions::default();
    c.bench_function("pair_integral_n1_eps1e-2", |b| {
        b.iter(|| pair_integral(&k, 3.0, 1.0, 1.0, black_box(100.0), &opts).unwrap())
    });
}

fn poisson(c: &mut Criterion) {
    let s = two_bubbles(2, 0.05, 128);
    let f = sample_f(&s.k, &s.cfg, &s.grid).unwrap();
    let solver = SolverConfig::default();
    let mut g = c.benchmark_group("poisson");
    g.sample_size(10);
    g.bench_function("dual_norm_n2_res128", |b| {
        b.iter(|| dminus1_norm(&s.grid, &f, &solver).unwrap())
    });
    g.bench_function("solve_rho_n2_res128", |b| {
        b.iter(|| solve_rho(&s.k, &s.cfg, &s.grid, &solver, &RhoOptions::default()).unwrap())
    });
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let s = two_bubbles(1, 0.1, 96);
    let truth = [AxisBubble::new(1.0, 0.0), AxisBubble::new(1.0, -10.0)];
    let u = s.grid.sample(|r, t| truth.iter().map(|b| b.u(&s.k, r, t)).sum());
    let start = [AxisBubble::new(1.05, 0.2), AxisBubble::new(0.95, -9.8)];
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.bench_function("two_bubbles_n1_res96", |b| {
        b.iter(|| fit_bubbles(&s.k, &s.grid, &u, &start, &FitOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, group, quadrature, poisson, fitting);
criterion_main!(benches);
