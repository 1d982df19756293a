use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hyperres::hyperboloid::H3Point;
use hyperres::invariant_forms::identity_suite;
use hyperres::pushforward_pipeline::{f_field_aligned, lhs_boundary, AlignedFiberRule, MainIdentityGrids};
use hyperres::sphere_conv::{funk_hecke_spectrum, kappa_eps};
use hyperres::zeta_series::log_ruelle_graded;
use hyperres_bench::{fixture_pair, fixture_records};
use num_complex::Complex64;

fn spectra(c: &mut Criterion) {
    let k = kappa_eps(0.125);
    c.bench_function("funk_hecke_kappa_eps_l128", |b| b.iter(|| funk_hecke_spectrum(black_box(&k), 128)));
}

fn densities(c: &mut Criterion) {
    let pair = fixture_pair(8);
    let ev = pair.evaluators().unwrap();
    let nu = [0.36, 0.48, 0.8];
    c.bench_function("real_evaluator_l8", |b| b.iter(|| ev.minus.eval(black_box(&nu))));
    let y = H3Point::from_polar(0.9, [0.6, 0.0, 0.8]);
    let rule = AlignedFiberRule::for_band(8);
    c.bench_function("f_field_aligned_l8", |b| b.iter(|| f_field_aligned(&ev.minus, &ev.plus, black_box(&y), &rule)));
}

fn main_identity(c: &mut Criterion) {
    let pair = fixture_pair(4);
    let ev = pair.evaluators().unwrap();
    let grids = MainIdentityGrids::for_band(4);
    let mut g = c.benchmark_group("main_identity");
    g.sample_size(10);
    g.bench_function("lhs_boundary_l4_eps_1_64", |b| b.iter(|| lhs_boundary(&ev.minus, &ev.plus, black_box(1.0 / 64.0), &grids)));
    g.finish();
}

fn identities(c: &mut Criterion) {
    let mut g = c.benchmark_group("identities");
    g.sample_size(10);
    g.bench_function("numeric_suite_100", |b| b.iter(|| identity_suite(None, 100, black_box(1))));
    g.finish();
}

fn zeta(c: &mut Criterion) {
    let recs = fixture_records(50);
    let lam = Complex64::new(0.0, 3.0);
    c.bench_function("log_ruelle_graded_50", |b| b.iter(|| log_ruelle_graded(black_box(&recs), lam)));
}

criterion_group!(benches, spectra, densities, main_identity, identities, zeta);
criterion_main!(benches);
