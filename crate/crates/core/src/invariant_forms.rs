//! The rotation 𝓘, the invariant 2-forms ψ and ω_±, and a seeded pointwise
//! identity suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exterior_core::{AlternatingForm, MinkowskiVector};
use crate::frame_bundle::{coframe_realize, coframe_values, forms, CoframePolynomial, FrameQuadruple};
use crate::hyperboloid::{
    alpha, cross_product, d_alpha, g_inner, generator, hv_join, hv_split_unchecked, random_sphere_tangent,
    random_tangent_at, random_unit_tangent, stun_split, GeometryError, HVSplit, SphereTangent, UnitTangent,
};

/// `𝓘(x,v)(ξ_H, ξ_V) = (v × ξ_V, v × ξ_H)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationI {
    pub base: UnitTangent,
}

impl RotationI {
    pub fn new(base: UnitTangent) -> Self {
        Self { base }
    }

    pub fn apply(&self, xi: &SphereTangent) -> Result<SphereTangent, GeometryError> {
        if xi.base != self.base {
            return Err(GeometryError::BaseMismatch);
        }
        Ok(rotation_apply_unchecked(xi))
    }
}

pub fn rotation_apply(i: &RotationI, xi: &SphereTangent) -> Result<SphereTangent, GeometryError> {
    i.apply(xi)
}

fn rotation_apply_unchecked(xi: &SphereTangent) -> SphereTangent {
    let p = &xi.base;
    let hv = hv_split_unchecked(xi);
    let h = cross_product(&p.x, &p.v, &hv.xi_v);
    let v = cross_product(&p.x, &p.v, &hv.xi_h);
    hv_join(p, &HVSplit { xi_h: h, xi_v: v })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoFormKind {
    DAlpha,
    Psi,
    OmegaPlus,
    OmegaMinus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTwoForm {
    pub kind: TwoFormKind,
    pub base: UnitTangent,
}

impl InvariantTwoForm {
    pub fn new(kind: TwoFormKind, base: UnitTangent) -> Self {
        Self { kind, base }
    }

    pub fn eval(&self, xi: &SphereTangent, eta: &SphereTangent) -> f64 {
        two_form_eval(self.kind, xi, eta)
    }

    /// Coefficients in the coordinates of `basis`.
    pub fn realize(&self, basis: &[SphereTangent]) -> AlternatingForm {
        AlternatingForm::from_fn(basis.len(), 2, |i| self.eval(&basis[i[0]], &basis[i[1]]))
    }

    pub fn coframe(&self) -> CoframePolynomial {
        match self.kind {
            TwoFormKind::DAlpha => forms::d_alpha(),
            TwoFormKind::Psi => forms::psi(),
            TwoFormKind::OmegaPlus => forms::omega_plus(),
            TwoFormKind::OmegaMinus => forms::omega_minus(),
        }
    }
}

/// `ψ(ξ,η) = g(v×ξ_H, η_H) − g(v×ξ_V, η_V)`.
pub fn psi_eval(xi: &SphereTangent, eta: &SphereTangent) -> f64 {
    let p = &xi.base;
    let a = hv_split_unchecked(xi);
    let b = hv_split_unchecked(eta);
    g_inner(&cross_product(&p.x, &p.v, &a.xi_h), &b.xi_h) - g_inner(&cross_product(&p.x, &p.v, &a.xi_v), &b.xi_v)
}

/// `ω₊` on the unstable components, `ω₋` on the stable components.
pub fn omega_eval(plus: bool, xi: &SphereTangent, eta: &SphereTangent) -> f64 {
    let p = &xi.base;
    let (a, b) = (stun_split(xi), stun_split(eta));
    let (wa, wb) = if plus { (a.unstable, b.unstable) } else { (a.stable, b.stable) };
    g_inner(&cross_product(&p.x, &p.v, &wa), &wb)
}

pub fn two_form_eval(kind: TwoFormKind, xi: &SphereTangent, eta: &SphereTangent) -> f64 {
    match kind {
        TwoFormKind::DAlpha => d_alpha(xi, eta),
        TwoFormKind::Psi => psi_eval(xi, eta),
        TwoFormKind::OmegaPlus => omega_eval(true, xi, eta),
        TwoFormKind::OmegaMinus => omega_eval(false, xi, eta),
    }
}

/// One line of the identity report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity_id: String,
    pub trials: usize,
    pub max_residual: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub entries: Vec<ResidualReport>,
}

impl SuiteReport {
    pub fn get(&self, id: &str) -> Option<&ResidualReport> {
        self.entries.iter().find(|e| e.identity_id == id)
    }
}

/// Identity ids in report order.
pub const NUMERIC_IDS: [&str; 11] = [
    "a_cross_product",
    "b_psi_psi",
    "c_dalpha_psi",
    "e_dalpha_beta",
    "f1_hodgy_podgy_1",
    "f2_hodgy_podgy_2",
    "h_alpha_omega_omega",
    "rotation_square",
    "psi_coframe_vs_hv",
    "omega_plus_coframe_vs_hv",
    "omega_minus_coframe_vs_hv",
];
pub const SYMBOLIC_IDS: [&str; 3] = ["d_d_psi", "g_d_omega_plus", "g_d_omega_minus"];

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn wedge_all(fs: &[&AlternatingForm]) -> AlternatingForm {
    let mut it = fs.iter();
    let first = (*it.next().expect("non-empty")).clone();
    it.fold(first, |acc, f| acc.wedge(f).expect("same dimension"))
}

fn diff(a: &AlternatingForm, b: &AlternatingForm) -> f64 {
    a.try_sub(b).expect("same shape").max_abs()
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// `g`-unit vector orthogonal to `v` in `T_xH³`.
fn random_perp<R: Rng + ?Sized>(rng: &mut R, p: &UnitTangent) -> MinkowskiVector {
    let w = random_tangent_at(rng, &p.point());
    w - p.v * g_inner(&w, &p.v)
}

/// Residuals of every numeric identity for one random configuration.
fn numeric_trial(rng: &mut ChaCha8Rng, base: Option<UnitTangent>, corrupt_psi: bool) -> [f64; 11] {
    let p = base.unwrap_or_else(|| random_unit_tangent(rng, 1.5));
    let x = p.point();
    let basis: Vec<SphereTangent> = (0..5).map(|_| random_sphere_tangent(rng, &p)).collect();
    let frame = {
        let (v2, v3) = crate::hyperboloid::tangent_frame(&p);
        let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let (s, c) = th.sin_cos();
        FrameQuadruple { x: p.x, v1: p.v, v2: v2 * c + v3 * s, v3: v3 * c - v2 * s }
    };
    let n = basis.len();
    let psi_f = |a: &SphereTangent, b: &SphereTangent| {
        if corrupt_psi {
            let (ha, hb) = (hv_split_unchecked(a), hv_split_unchecked(b));
            g_inner(&cross_product(&p.x, &p.v, &ha.xi_h), &hb.xi_h)
                + g_inner(&cross_product(&p.x, &p.v, &ha.xi_v), &hb.xi_v)
        } else {
            psi_eval(a, b)
        }
    };
    let alpha_f = AlternatingForm::from_fn(n, 1, |i| alpha(&basis[i[0]]));
    let da = AlternatingForm::from_fn(n, 2, |i| d_alpha(&basis[i[0]], &basis[i[1]]));
    let psi = AlternatingForm::from_fn(n, 2, |i| psi_f(&basis[i[0]], &basis[i[1]]));
    let om_p = AlternatingForm::from_fn(n, 2, |i| omega_eval(true, &basis[i[0]], &basis[i[1]]));
    let om_m = AlternatingForm::from_fn(n, 2, |i| omega_eval(false, &basis[i[0]], &basis[i[1]]));

    // (a) cross-product identity.
    let ws: Vec<MinkowskiVector> = (0..4).map(|_| random_perp(rng, &p)).collect();
    let cx = |a: &MinkowskiVector| cross_product(&p.x, &p.v, a);
    let lhs = g_inner(&cx(&ws[0]), &ws[1]) * g_inner(&cx(&ws[2]), &ws[3]);
    let rhs = g_inner(&ws[0], &ws[2]) * g_inner(&ws[1], &ws[3]) - g_inner(&ws[1], &ws[2]) * g_inner(&ws[0], &ws[3]);
    let r_a = (lhs - rhs).abs();

    let r_b = diff(&psi.wedge(&psi).unwrap(), &da.wedge(&da).unwrap());
    let r_c = da.wedge(&psi).unwrap().max_abs();

    // (e) β with ι_Xβ = 0.
    let gen = generator(&p);
    let (bh, bv) = (random_tangent_at(rng, &x), random_tangent_at(rng, &x));
    let beta_at = |xi: &SphereTangent| -> f64 {
        let s = hv_split_unchecked(xi);
        g_inner(&bh, &s.xi_h) + g_inner(&bv, &s.xi_v)
    };
    let bx = beta_at(&gen);
    let beta0 = |xi: &SphereTangent| beta_at(xi) - bx * alpha(xi);
    let beta = AlternatingForm::from_fn(n, 1, |i| beta0(&basis[i[0]]));
    let beta_i = AlternatingForm::from_fn(n, 1, |i| beta0(&rotation_apply_unchecked(&basis[i[0]])));
    let r_e = diff(&da.wedge(&beta).unwrap(), &psi.wedge(&beta_i).unwrap());

    // (f) unstable u, pullback β and its Hodge star.
    let (cu1, cu2) = (normal(rng), normal(rng));
    let vals: Vec<[f64; 6]> = basis.iter().map(|b| coframe_values(&frame, b)).collect();
    let u = AlternatingForm::covector(&vals.iter().map(|v| cu1 * v[4] + cu2 * v[5]).collect::<Vec<_>>());
    let bvec = random_tangent_at(rng, &x);
    let pb = AlternatingForm::from_fn(n, 1, |i| g_inner(&bvec, &basis[i[0]].xi_x));
    let star = AlternatingForm::from_fn(n, 2, |i| g_inner(&bvec, &cross_product(&p.x, &basis[i[0]].xi_x, &basis[i[1]].xi_x)));
    let f1l = wedge_all(&[&psi, &u, &star]);
    let f1r = wedge_all(&[&alpha_f, &da, &u, &pb]).scale(-1.0);
    let f2l = wedge_all(&[&da, &u, &star]);
    let f2r = wedge_all(&[&alpha_f, &psi, &u, &pb]);
    let r_f1 = diff(&f1l, &f1r);
    let r_f2 = diff(&f2l, &f2r);

    // (h) α∧ω₋∧ω₊ = −dvol_α / 8.
    let dvol = wedge_all(&[&alpha_f, &da, &da]);
    let r_h = diff(&wedge_all(&[&alpha_f, &om_m, &om_p]), &dvol.scale(-0.125));

    // 𝓘² = −Id on ker α.
    let xi = random_sphere_tangent(rng, &p);
    let xi0 = xi.sub(&gen.scale(alpha(&xi)));
    let ii = rotation_apply_unchecked(&rotation_apply_unchecked(&xi0));
    let d = ii.add(&xi0);
    let r_rot = d.xi_x.max_abs().max(d.xi_v.max_abs());

    // Coframe realizations against the H/V formulas.
    let cf = |poly: CoframePolynomial| coframe_realize(&poly, &frame, &basis).expect("descending form");
    let r_psi_cf = diff(&cf(forms::psi()), &psi);
    let r_op = diff(&cf(forms::omega_plus()), &om_p);
    let r_om = diff(&cf(forms::omega_minus()), &om_m);

    [r_a, r_b, r_c, r_e, r_f1, r_f2, r_h, r_rot, r_psi_cf, r_op, r_om]
}

fn symbolic_residuals() -> [f64; 3] {
    let psi = forms::psi();
    let a = forms::alpha();
    let (op, om) = (forms::omega_plus(), forms::omega_minus());
    let r_d = psi.d().max_abs_f64();
    let r_p = op.d().sub(&a.wedge(&op).scale_int(2)).max_abs_f64();
    let r_m = om.d().add(&a.wedge(&om).scale_int(2)).max_abs_f64();
    [r_d, r_p, r_m]
}

fn run_trials(base: Option<UnitTangent>, trials: usize, seed: u64, corrupt: bool) -> [f64; 11] {
    (0..trials)
        .into_par_iter()
        .map(|t| numeric_trial(&mut trial_rng(seed, t), base, corrupt))
        .reduce(|| [0.0; 11], |a, b| std::array::from_fn(|i| a[i].max(b[i])))
}

/// Max residual of each identity over `trials` seeded random configurations.
/// With `base = None` every trial draws a fresh base point.
pub fn identity_suite(base: Option<UnitTangent>, trials: usize, seed: u64) -> SuiteReport {
    let numeric = run_trials(base, trials, seed, false);
    let symbolic = symbolic_residuals();
    let mut entries = Vec::new();
    for (id, r) in NUMERIC_IDS.iter().zip(numeric) {
        entries.push(ResidualReport { identity_id: id.to_string(), trials, max_residual: r, seed });
    }
    for (id, r) in SYMBOLIC_IDS.iter().zip(symbolic) {
        entries.push(ResidualReport { identity_id: id.to_string(), trials: 1, max_residual: r, seed });
    }
    SuiteReport { seed, trials, entries }
}

/// Identity (b) evaluated with a sign-flipped vertical block of ψ.
pub fn corrupted_psi_control(trials: usize, seed: u64) -> ResidualReport {
    let r = run_trials(None, trials, seed, true);
    ResidualReport { identity_id: "b_psi_psi_corrupted".into(), trials, max_residual: r[1], seed }
}
