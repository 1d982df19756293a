use hyperres::boundary::{
    b_pm, boundary_maps, mobius_action, phi_pm, poisson_kernel, v_pm, xi_forward, xi_inverse, xi_jacobian, BoundaryPoint, Sign,
};
use hyperres::frame_bundle::{commutator_table, FieldTag, FrameQuadruple};
use hyperres::hyperboloid::{
    alpha, antipodal, dist, generator, geodesic_flow, is_lorentz, random_lorentz, random_sphere_tangent, random_unit3,
    random_unit_tangent, sasaki_norm, H3Point, UnitTangent,
};
use hyperres::quadrature::{norm3, sub3};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn brackets_are_antisymmetric() {
    let t = commutator_table().unwrap();
    for a in FieldTag::ALL {
        assert!(t.get(a, a).iter().all(|c| c.is_zero()));
        for b in FieldTag::ALL {
            for (x, y) in t.get(a, b).iter().zip(t.get(b, a)) {
                assert_eq!(*x, -*y);
            }
        }
    }
}

#[test]
fn standard_tangent_boundary_values() {
    let m = boundary_maps(&UnitTangent::standard());
    assert_eq!((m.phi_minus, m.phi_plus), (1.0, 1.0));
    assert!((norm3(&sub3(&m.b_minus.nu, &m.b_plus.nu)) - 2.0).abs() < 1e-15);
    assert!((xi_jacobian(&UnitTangent::standard()) - 4.0).abs() < 1e-15);
}

#[test]
fn coincident_endpoints_are_rejected() {
    let nu = BoundaryPoint::new([0.0, 0.0, 1.0]).unwrap();
    assert!(hyperres::boundary::XiCoordinates::new(nu, nu, 0.0).is_err());
    assert!(BoundaryPoint::new([0.0, 0.0, 2.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_stays_on_unit_tangent_bundle(seed in any::<u64>(), t in -4.0f64..4.0) {
        let p = random_unit_tangent(&mut rng(seed), 2.0);
        let q = geodesic_flow(&p, t);
        prop_assert!(q.defect() < 1e-9 * (1.0 + t.abs().exp()));
        prop_assert!((dist(&p.point(), &q.point()) - t.abs()).abs() < 1e-7);
    }

    #[test]
    fn flow_rescales_phi_and_fixes_b(seed in any::<u64>(), t in -3.0f64..3.0) {
        let p = random_unit_tangent(&mut rng(seed), 1.5);
        let q = geodesic_flow(&p, t);
        for s in [Sign::Minus, Sign::Plus] {
            let want = phi_pm(&p, s) * (s.value() * t).exp();
            prop_assert!((phi_pm(&q, s) - want).abs() < 1e-10 * want);
            prop_assert!(norm3(&sub3(&b_pm(&p, s).nu, &b_pm(&q, s).nu)) < 1e-10);
        }
    }

    #[test]
    fn lorentz_invariance_of_distance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_lorentz(&mut r, 1.0);
        prop_assert!(is_lorentz(&g, 1e-9));
        let p = random_unit_tangent(&mut r, 1.5);
        let q = random_unit_tangent(&mut r, 1.5);
        let (x, y) = (p.point(), q.point());
        let d0 = dist(&x, &y);
        let d1 = dist(&x.transform(&g), &y.transform(&g));
        prop_assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0));
    }

    #[test]
    fn phi_product_and_round_trip(seed in any::<u64>()) {
        let p = random_unit_tangent(&mut rng(seed), 2.5);
        let m = boundary_maps(&p);
        let sep = norm3(&sub3(&m.b_minus.nu, &m.b_plus.nu));
        prop_assert!((m.phi_minus * m.phi_plus * sep * sep - 4.0).abs() < 1e-9);
        let back = xi_inverse(&xi_forward(&p)).unwrap();
        let scale = p.x.0[0];
        for i in 0..4 {
            prop_assert!((back.x.0[i] - p.x.0[i]).abs() < 1e-12 * scale);
            prop_assert!((back.v.0[i] - p.v.0[i]).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn b_is_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_lorentz(&mut r, 1.0);
        let p = random_unit_tangent(&mut r, 1.5);
        let gp = p.transform(&g);
        for s in [Sign::Minus, Sign::Plus] {
            let (l, n) = mobius_action(&g, &b_pm(&p, s)).unwrap();
            prop_assert!(norm3(&sub3(&l.nu, &b_pm(&gp, s).nu)) < 1e-10);
            prop_assert!((phi_pm(&gp, s) - n * phi_pm(&p, s)).abs() < 1e-9 * phi_pm(&gp, s));
        }
    }

    #[test]
    fn v_pm_points_at_nu(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_unit_tangent(&mut r, 2.0).point();
        let nu = BoundaryPoint::normalized(random_unit3(&mut r));
        for s in [Sign::Minus, Sign::Plus] {
            let p = UnitTangent::new(*x.coords(), v_pm(&x, &nu, s)).unwrap();
            prop_assert!(norm3(&sub3(&b_pm(&p, s).nu, &nu.nu)) < 1e-10);
            prop_assert!((phi_pm(&p, s) - poisson_kernel(&x, &nu)).abs() < 1e-9 * phi_pm(&p, s));
        }
    }

    #[test]
    fn antipodal_swaps_endpoints(seed in any::<u64>()) {
        let p = random_unit_tangent(&mut rng(seed), 2.0);
        let q = antipodal(&p);
        prop_assert!(norm3(&sub3(&b_pm(&p, Sign::Plus).nu, &b_pm(&q, Sign::Minus).nu)) < 1e-12);
        prop_assert!((phi_pm(&p, Sign::Plus) - phi_pm(&q, Sign::Minus)).abs() < 1e-12 * phi_pm(&p, Sign::Plus));
    }

    #[test]
    fn generator_is_reeb_field(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_unit_tangent(&mut r, 2.0);
        let x = generator(&p);
        prop_assert!((alpha(&x) - 1.0).abs() < 1e-12);
        prop_assert!((sasaki_norm(&x) - 1.0).abs() < 1e-12);
        let xi = random_sphere_tangent(&mut r, &p);
        prop_assert!(xi.defect() < 1e-9 * (1.0 + sasaki_norm(&xi)));
    }

    #[test]
    fn frame_matrix_round_trip(seed in any::<u64>()) {
        let g = random_lorentz(&mut rng(seed), 1.5);
        let f = FrameQuadruple::from_matrix(&g);
        prop_assert!((f.matrix() - g).abs().max() < 1e-12 * g.abs().max());
        let p = f.unit_tangent();
        prop_assert!(p.defect() < 1e-10 * g.abs().max().powi(2));
        let x = H3Point::origin().transform(&g);
        prop_assert!((x.coords().0[0] - p.x.0[0]).abs() < 1e-12 * g.abs().max());
    }
}
