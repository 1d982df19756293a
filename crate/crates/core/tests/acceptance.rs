//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use hyperres::boundary::{boundary_maps, xi_forward, xi_inverse, xi_jacobian, xi_jacobian_fd};
use hyperres::frame_bundle::{commutator_table, Coframe, FieldTag, Rational};
use hyperres::hyperboloid::random_unit_tangent;
use hyperres::invariant_forms::{identity_suite, NUMERIC_IDS};
use hyperres::pushforward_pipeline::{main_identity_check, transport_residual, MainIdentityGrids};
use hyperres::qs_radial::{intertwining_residual, q_s_apply_at_origin, radial_laplacian, PowerProfile, QsConfig, RadialProfile};
use hyperres::quadrature::{dot3, sub3};
use hyperres::sphere_conv::{
    funk_hecke_spectrum, kappa_eps, kappa_tilde, log_log_slope, regularization_norm_decay, schur_bound, BandCap,
    SampleKernel,
};
use hyperres::verify::{
    default_eps_list, default_pairs, exact_identity_defects, intertwining_test_functions, matrix_subspace_agreement,
    maurer_cartan_defect, pushforward_constants, zeta_agreement, VerifyOptions,
};
use hyperres::zeta_series::{ruelle_order, MultiplicityCase, MultiplicityTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

struct Line {
    passed: usize,
    failed: usize,
}

impl Line {
    fn report(&mut self, n: usize, name: &str, ok: bool, budget_s: f64, start: Instant, detail: String) {
        let t = start.elapsed().as_secs_f64();
        let ok = ok && t < budget_s;
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!(
            "criterion {n:>2} {} {name}: {detail} [{t:.2}s / {budget_s:.0}s]",
            if ok { "PASS" } else { "FAIL" }
        );
    }
}

fn c1(l: &mut Line) {
    use FieldTag::*;
    let t0 = Instant::now();
    // (a, b, c) with [a, b] = Σ c_k Y_k, listed for a before b.
    let relations: [(FieldTag, FieldTag, &[(FieldTag, i64)]); 15] = [
        (X, R, &[]),
        (X, U1Plus, &[(U1Plus, 1)]),
        (X, U2Plus, &[(U2Plus, 1)]),
        (X, U1Minus, &[(U1Minus, -1)]),
        (X, U2Minus, &[(U2Minus, -1)]),
        (R, U1Plus, &[(U2Plus, -1)]),
        (R, U2Plus, &[(U1Plus, 1)]),
        (R, U1Minus, &[(U2Minus, -1)]),
        (R, U2Minus, &[(U1Minus, 1)]),
        (U1Plus, U2Plus, &[]),
        (U1Plus, U1Minus, &[(X, 2)]),
        (U1Plus, U2Minus, &[(R, 2)]),
        (U2Plus, U1Minus, &[(R, -2)]),
        (U2Plus, U2Minus, &[(X, 2)]),
        (U1Minus, U2Minus, &[]),
    ];
    let table = commutator_table().expect("brackets close");
    let mut mismatches = 0;
    for a in FieldTag::ALL {
        let got = table.get(a, a);
        mismatches += got.iter().filter(|c| **c != Rational::from_integer(0)).count();
    }
    for (a, b, rhs) in relations {
        let mut want = [Rational::from_integer(0); 6];
        for &(k, c) in rhs {
            want[k.index()] = Rational::from_integer(c);
        }
        let neg: [Rational; 6] = want.map(|c| -c);
        mismatches += (0..6).filter(|&i| table.get(a, b)[i] != want[i]).count();
        mismatches += (0..6).filter(|&i| table.get(b, a)[i] != neg[i]).count();
    }
    l.report(1, "structure constants", mismatches == 0, 1.0, t0, format!("{mismatches} mismatched rational entries of 216"));
}

fn c2(l: &mut Line) {
    let t0 = Instant::now();
    let mc = maurer_cartan_defect(&Coframe::ALL);
    let ex = exact_identity_defects();
    let worst = ex.iter().map(|e| e.1).fold(mc, f64::max);
    let names: Vec<&str> = ex.iter().map(|e| e.0).collect();
    l.report(
        2,
        "exact coframe identities",
        worst == 0.0,
        1.0,
        t0,
        format!("max |coefficient| of dθ + θ([·,·]) and {} = {worst}", names.join(", ")),
    );
}

fn c3(l: &mut Line) {
    let t0 = Instant::now();
    let rep = identity_suite(None, 1000, SEED);
    let (worst_id, worst) = NUMERIC_IDS
        .iter()
        .map(|id| (*id, rep.get(id).map_or(f64::INFINITY, |e| e.max_residual)))
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    l.report(3, "numeric identity suite", worst < 1e-10, 10.0, t0, format!("max residual {worst:.2e} ({worst_id}) over 1000 frames, tol 1e-10"));
}

fn c4(l: &mut Line) {
    let t0 = Instant::now();
    let r = pushforward_constants(&VerifyOptions::new(SEED)).expect("pushforward");
    let ok = r[0] < 1e-8 && r[1] < 1e-8 && r[2] < 1e-8 && r[3] < 1e-8;
    l.report(
        4,
        "pushforward constants",
        ok,
        30.0,
        t0,
        format!(
            "rel err ψ {:.1e}, dvol_α {:.1e}; |π(α∧dα)| {:.1e}, |π(α∧ψ)| {:.1e} at fiber grid 48x96, tol 1e-8",
            r[0], r[1], r[2], r[3]
        ),
    );
}

fn c5(l: &mut Line) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut prod, mut trip, mut jac): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let p = random_unit_tangent(&mut rng, 3.0);
        let m = boundary_maps(&p);
        let d = sub3(&m.b_minus.nu, &m.b_plus.nu);
        prod = prod.max((m.phi_minus * m.phi_plus * dot3(&d, &d) - 4.0).abs());
        let q = xi_inverse(&xi_forward(&p)).expect("distinct endpoints");
        trip = trip.max((q.x - p.x).max_abs().max((q.v - p.v).max_abs()) / p.x.0[0]);
    }
    for _ in 0..100 {
        let p = random_unit_tangent(&mut rng, 2.0);
        let a = xi_jacobian(&p);
        jac = jac.max((xi_jacobian_fd(&p, 1e-4) - a).abs() / a);
    }
    let ok = prod < 1e-10 && trip < 1e-10 && jac < 1e-4;
    l.report(
        5,
        "boundary geometry",
        ok,
        30.0,
        t0,
        format!("|Φ-Φ+|B-−B+|²−4| {prod:.1e}, Ξ round trip {trip:.1e} (tol 1e-10); Jacobian rel err {jac:.1e} (tol 1e-4)"),
    );
}

fn c6(l: &mut Line) {
    let t0 = Instant::now();
    let mut lap: f64 = 0.0;
    for s in [3.0, 4.0, 5.0] {
        let t = radial_laplacian(PowerProfile::new(s));
        for i in 0..100 {
            let rho: f64 = 1.0 + 0.3 * i as f64;
            let a = s * (s + 1.0) * rho.powf(-s - 2.0);
            let b = s * (2.0 - s) * rho.powf(-s);
            lap = lap.max((t.eval(rho) - a - b).abs() / (a.abs() + b.abs()));
        }
    }
    let mut inter: f64 = 0.0;
    for s in [3.0, 4.0] {
        let cfg = QsConfig::new(s).unwrap();
        for f in intertwining_test_functions() {
            inter = inter.max(intertwining_residual(&cfg, &f).unwrap().relative);
        }
    }
    let q = q_s_apply_at_origin(&QsConfig::new(4.0).unwrap(), &|_| 1.0).unwrap().value;
    let qerr = (q - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
    let ok = lap < 1e-10 && inter < 1e-5 && qerr < 1e-6;
    l.report(
        6,
        "radial operators",
        ok,
        60.0,
        t0,
        format!("radial Laplacian {lap:.1e} (tol 1e-10); intertwining rel {inter:.1e} (tol 1e-5); Q_4 1(e0) rel {qerr:.1e} (tol 1e-6)"),
    );
}

fn c7(l: &mut Line) {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut excess, mut tilde): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let k = SampleKernel::random(&mut rng);
        let s = funk_hecke_spectrum(&k, 64);
        let b = schur_bound(&k);
        excess = excess.max(s.schur_defect(b) / b);
        let t = funk_hecke_spectrum(&kappa_tilde(k.clone()), 64);
        let scale = s.lambdas.iter().enumerate().map(|(l, x)| (l * l + l).max(1) as f64 * x.abs()).fold(0.0, f64::max);
        for (lv, (a, c)) in t.lambdas.iter().zip(&s.lambdas).enumerate() {
            tilde = tilde.max((a + (lv * lv + lv) as f64 * c).abs() / scale);
        }
    }
    let eps: Vec<f64> = (1..=6).map(|k| 2f64.powi(-k)).collect();
    let decay = regularization_norm_decay(&eps, BandCap::Scaled(64));
    let l1: Vec<f64> = eps.iter().map(|&e| kappa_eps(e).l1_profile(0, 0)).collect();
    let l1_slope = log_log_slope(&eps, &l1);
    let ok = excess <= 1e-12
        && tilde < 1e-8
        && decay.strictly_decreasing
        && (0.7..=1.3).contains(&decay.slope)
        && (l1_slope - 4.0).abs() <= 0.3;
    l.report(
        7,
        "sphere convolution",
        ok,
        60.0,
        t0,
        format!(
            "Schur excess {excess:.1e}; κ̃ rel {tilde:.1e} (tol 1e-8); ‖A_κε‖ decreasing {}, slope {:.3} in [0.7,1.3]; ‖κ_ε‖_L¹ slope {l1_slope:.3} (4 ± 0.3)",
            decay.strictly_decreasing, decay.slope
        ),
    );
}

fn c8(l: &mut Line) {
    let t0 = Instant::now();
    let eps = default_eps_list();
    let mut ok = true;
    let mut parts = Vec::new();
    for lp in default_pairs(SEED) {
        let grids = MainIdentityGrids::for_band(lp.pair.l_max);
        let r = main_identity_check(&lp.pair, &eps, &grids).expect("main identity");
        if lp.label == "constant" {
            let want = 4.0 * PI * PI / 9.0;
            let rel = (r.rhs - want).abs() / want;
            let lb = r.rows.last().unwrap().lhs_boundary;
            let brel = (lb - r.rhs).abs() / r.rhs.abs();
            ok &= rel < 1e-6 && brel < 1e-3;
            parts.push(format!("g≡1: rhs rel {rel:.1e}, lhs_boundary(2^-6) rel {brel:.1e}"));
        } else {
            let bulk = r.max_bulk_residual.unwrap_or(f64::INFINITY);
            ok &= bulk < 1e-3 && r.identity_residual < 1e-3 && r.fd_residual < 1e-3;
            parts.push(format!(
                "{} (L={}): bulk {bulk:.1e}, boundary {:.1e}, rhs_fd {:.1e}",
                lp.label, lp.pair.l_max, r.identity_residual, r.fd_residual
            ));
        }
    }
    l.report(8, "main identity", ok, 600.0, t0, format!("{} (tols 1e-6 / 1e-3, relative to S)", parts.join("; ")));
}

fn c9(l: &mut Line) {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for lp in default_pairs(SEED) {
        let r = transport_residual(&lp.pair, 100, SEED).expect("transport").max();
        let tol = if lp.pair.l_max == 0 { 1e-6 } else { 1e-4 };
        ok &= r < tol;
        parts.push(format!("{} {r:.1e} (tol {tol:.0e})", lp.label));
    }
    l.report(9, "transport equations", ok, 60.0, t0, parts.join(", "));
}

fn c10(l: &mut Line) {
    let t0 = Instant::now();
    let agree = zeta_agreement(SEED, 5).expect("zeta");
    let mut orders_ok = true;
    for b1 in 0..=5u64 {
        let b = b1 as i64;
        orders_ok &= ruelle_order(&MultiplicityTable::new([1, 2 * b, 2 * b + 2, 2 * b, 1], b1).unwrap()) == 4 - 2 * b;
        orders_ok &= ruelle_order(&MultiplicityTable::for_case(MultiplicityCase::Hyperbolic, b1)) == 4 - 2 * b;
        orders_ok &= ruelle_order(&MultiplicityTable::new([1, b, b + 2, b, 1], b1).unwrap()) == 4 - b;
        orders_ok &= ruelle_order(&MultiplicityTable::for_case(MultiplicityCase::Perturbed, b1)) == 4 - b;
    }
    l.report(
        10,
        "zeta arithmetic",
        agree < 1e-10 && orders_ok,
        10.0,
        t0,
        format!("graded vs product {agree:.1e} (tol 1e-10); orders 4−2b1 / 4−b1 for b1 ≤ 5: {orders_ok}"),
    );
}

fn c11(l: &mut Line) {
    let t0 = Instant::now();
    let a = matrix_subspace_agreement(SEED, 1000);
    l.report(
        11,
        "matrix-subspace search",
        a.disagreements == 0,
        30.0,
        t0,
        format!("{} disagreements on {} instances ({} admit an invertible element)", a.disagreements, a.instances, a.with_invertible),
    );
}

fn main() {
    let mut l = Line { passed: 0, failed: 0 };
    c1(&mut l);
    c2(&mut l);
    c3(&mut l);
    c4(&mut l);
    c5(&mut l);
    c6(&mut l);
    c7(&mut l);
    c8(&mut l);
    c9(&mut l);
    c10(&mut l);
    c11(&mut l);
    println!("acceptance: {} passed, {} failed", l.passed, l.failed);
    if l.failed > 0 {
        std::process::exit(1);
    }
}
