use std::f64::consts::PI;

use hyperres::boundary::Sign;
use hyperres::harmonics::{RealEvaluator, SphereFunction};
use hyperres::hyperboloid::{random_point, H3Point};
use hyperres::pushforward_pipeline::{
    main_identity_check, rhs_double_integral, sigma_harmonicity, transport_residual, BoundaryDensityPair, MainIdentityGrids,
    SigmaField,
};
use hyperres::quadrature::SphereGrid;
use hyperres::verify::default_eps_list;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Funk–Hecke eigenvalues of `(1 − t)² = 4/3 P₀ − 2 P₁ + 2/3 P₂`.
const RHS_LAMBDAS: [f64; 3] = [16.0 * PI / 3.0, -8.0 * PI / 3.0, 8.0 * PI / 15.0];

fn spectral_rhs(gm: &SphereFunction, gp: &SphereFunction) -> f64 {
    let mut s = 0.0;
    for (l, lam) in RHS_LAMBDAS.iter().enumerate() {
        if l > gm.l_max().min(gp.l_max()) {
            break;
        }
        for m in -(l as i64)..=l as i64 {
            s += lam * (gm.coeff(l, m) * gp.coeff(l, m).conj()).re;
        }
    }
    s / 48.0
}

#[test]
fn rhs_constant_closed_form() {
    let one = |_: &[f64; 3]| 1.0;
    let v = rhs_double_integral(&one, &one, &SphereGrid::new(8, 16));
    assert!((v - 4.0 * PI * PI / 9.0).abs() < 1e-13, "{v}");
    assert!((v - 4.386_490_844_928_603).abs() < 1e-12);
}

#[test]
fn rhs_matches_spectral_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for l_max in [1, 2, 4, 6] {
        let pair = BoundaryDensityPair::random(&mut rng, l_max, 0.3);
        let ev = pair.evaluators().unwrap();
        let grid = SphereGrid::new(l_max + 4, 2 * l_max + 8);
        let quad = rhs_double_integral(&ev.minus, &ev.plus, &grid);
        let spec = spectral_rhs(pair.get(Sign::Minus), pair.get(Sign::Plus));
        assert!((quad - spec).abs() < 1e-12 * spec.abs().max(1.0), "L={l_max}: {quad} vs {spec}");
    }
}

#[test]
fn rhs_ignores_degrees_above_two() {
    let gm = SphereFunction::real_ylm(3, 1);
    let ev = RealEvaluator::new(&gm).unwrap();
    let v = rhs_double_integral(&ev, &ev, &SphereGrid::new(10, 20));
    assert!(v.abs() < 1e-14, "{v}");
}

#[test]
fn zero_pair_is_identically_zero() {
    let pair = BoundaryDensityPair::constant(0.0, 0.0);
    let r = main_identity_check(&pair, &default_eps_list(), &MainIdentityGrids::for_band(pair.l_max)).unwrap();
    assert_eq!(r.scale, 0.0);
    assert_eq!(r.rhs, 0.0);
    assert!(r.identity_residual == 0.0 && r.fd_residual == 0.0);
    assert!(r.monotone);
}

#[test]
fn constant_pair_identity_and_monotone() {
    let pair = BoundaryDensityPair::constant(1.0, 1.0);
    let grids = MainIdentityGrids::for_band(pair.l_max);
    let r = main_identity_check(&pair, &[0.5, 0.25, 0.125, 2f64.powi(-6)], &grids).unwrap();
    assert!((r.rhs - 4.0 * PI * PI / 9.0).abs() < 1e-12 * r.rhs);
    assert!(r.identity_residual < 1e-3, "{}", r.identity_residual);
    assert!(r.fd_residual < 1e-3, "{}", r.fd_residual);
    assert!(r.monotone);
    assert_eq!(r.rows.first().unwrap().eps, 0.5);
    assert!(r.rows.windows(2).all(|w| w[0].eps > w[1].eps));
}

#[test]
fn bad_eps_lists_are_rejected() {
    let pair = BoundaryDensityPair::constant(1.0, 1.0);
    let grids = MainIdentityGrids::for_band(0);
    assert!(main_identity_check(&pair, &[], &grids).is_err());
    assert!(main_identity_check(&pair, &[0.5, -1.0], &grids).is_err());
    assert!(main_identity_check(&pair, &[f64::NAN], &grids).is_err());
}

#[test]
fn sigma_is_tangent_and_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = SphereFunction::random_real(&mut rng, 3, 0.5);
    let ev = RealEvaluator::new(&g).unwrap();
    for sign in [Sign::Minus, Sign::Plus] {
        let field = SigmaField::new(&ev, sign, SphereGrid::new(24, 48)).unwrap();
        for _ in 0..4 {
            let x = random_point(&mut rng, 1.0);
            let s = field.eval(&x).0.iter().map(|c| c.abs()).fold(0.0, f64::max);
            assert!(field.tangency_defect(&x) < 1e-12 * s.max(1.0));
            let h = sigma_harmonicity(&field, &x, 1e-3);
            assert!(h.curl < 1e-7, "curl {}", h.curl);
            assert!((h.divergence - h.predicted_divergence).abs() < 1e-7, "{h:?}");
        }
    }
}

#[test]
fn sigma_is_harmonic_for_mean_zero_density() {
    let g = SphereFunction::real_ylm(1, 0);
    let ev = RealEvaluator::new(&g).unwrap();
    let field = SigmaField::new(&ev, Sign::Plus, SphereGrid::new(16, 32)).unwrap();
    assert!(field.mass().abs() < 1e-14);
    for x in [H3Point::origin(), H3Point::from_polar(0.9, [0.0, 0.6, 0.8])] {
        let h = sigma_harmonicity(&field, &x, 1e-3);
        assert!(h.curl < 1e-7 && h.divergence.abs() < 1e-7, "{h:?}");
    }
}

#[test]
fn transport_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for l in [0, 2, 5] {
        let pair = BoundaryDensityPair::random(&mut rng, l, 0.5);
        let r = transport_residual(&pair, 50, 4).unwrap();
        assert!(r.max() < 1e-4, "L={l}: {r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rhs_is_bilinear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = SphereFunction::random_real(&mut rng, 3, 0.0);
        let g2 = SphereFunction::random_real(&mut rng, 3, 0.0);
        let h = SphereFunction::random_real(&mut rng, 3, 0.0);
        let e1 = RealEvaluator::new(&g1).unwrap();
        let e2 = RealEvaluator::new(&g2).unwrap();
        let eh = RealEvaluator::new(&h).unwrap();
        let grid = SphereGrid::new(8, 16);
        let mix = |nu: &[f64; 3]| a * e1.eval(nu) + b * e2.eval(nu);
        let lhs = rhs_double_integral(&mix, &eh, &grid);
        let rhs = a * rhs_double_integral(&e1, &eh, &grid) + b * rhs_double_integral(&e2, &eh, &grid);
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
    }

    #[test]
    fn rhs_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = BoundaryDensityPair::random(&mut rng, 4, 0.2);
        let ev = pair.evaluators().unwrap();
        let grid = SphereGrid::new(8, 16);
        let ab = rhs_double_integral(&ev.minus, &ev.plus, &grid);
        let ba = rhs_double_integral(&ev.plus, &ev.minus, &grid);
        prop_assert!((ab - ba).abs() < 1e-12 * (1.0 + ab.abs()));
    }

    #[test]
    fn pair_json_round_trips(seed in any::<u64>(), l in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = BoundaryDensityPair::random(&mut rng, l, 0.1);
        prop_assert_eq!(BoundaryDensityPair::from_json(&pair.to_json()).unwrap(), pair);
    }
}
