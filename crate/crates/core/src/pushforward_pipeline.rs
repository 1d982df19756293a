//! Fiber pushforward along `SH³ → H³`, the transported densities `f_±`, the
//! boundary 1-forms `σ_±`, the lifted density `F`, and the regularized
//! main-identity check at `e₀`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{richardson, Sign};
use crate::cutoff::chi;
use crate::exterior_core::{mink_inner, MinkowskiVector};
use crate::frame_bundle::{tangent_curve, FrameQuadruple};
use crate::harmonics::{Density, HarmonicsError, RealEvaluator, SphereFunction};
use crate::hyperboloid::{
    alpha, antipodal_differential, boost_from_origin, g_inner, geodesic_flow, horizontal_lift, laplacian_fd,
    random_unit_tangent, tangent_frame, vertical_lift, H3Point, SphereTangent, UnitTangent,
};
use crate::invariant_forms::{two_form_eval, TwoFormKind};
use crate::quadrature::{complete_frame3, dot3, Rule1d, SphereGrid};
use crate::sphere_conv::psi_eps;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("pair document: {0}")]
    Parse(String),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error("form degree {0} outside 2..=5")]
    Degree(usize),
    #[error("expected {expected} test vectors, got {got}")]
    TestVectors { expected: usize, got: usize },
    #[error("test vector not tangent at x (defect {0:e})")]
    NotTangent(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fiber grid under-resolved: {value:e} vs coarse {coarse:e}")]
    UnderResolved { value: f64, coarse: f64 },
    #[error("invalid regularization parameter {0}")]
    InvalidEps(f64),
}

pub const DEFAULT_FIBER_GRID: (usize, usize) = (48, 96);

pub fn default_fiber_grid() -> SphereGrid {
    SphereGrid::new(DEFAULT_FIBER_GRID.0, DEFAULT_FIBER_GRID.1)
}

// ---------------------------------------------------------------------------
// Boundary density pairs

/// Band-limited boundary data `g_±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDensityPair {
    pub l_max: usize,
    pub g_minus: SphereFunction,
    pub g_plus: SphereFunction,
    pub real: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDocument {
    #[serde(rename = "L")]
    l: usize,
    g_minus: Vec<(i64, i64, f64, f64)>,
    g_plus: Vec<(i64, i64, f64, f64)>,
    #[serde(default = "default_real")]
    real: bool,
}

fn default_real() -> bool {
    true
}

fn entries(f: &SphereFunction) -> Vec<(i64, i64, f64, f64)> {
    let mut out = Vec::new();
    for l in 0..=f.l_max() {
        for m in -(l as i64)..=l as i64 {
            let c = f.coeff(l, m);
            if c.norm() > 0.0 {
                out.push((l as i64, m, c.re, c.im));
            }
        }
    }
    out
}

impl BoundaryDensityPair {
    /// Real-valued pair; fails if either function lacks conjugate symmetry.
    pub fn new(g_minus: SphereFunction, g_plus: SphereFunction) -> Result<Self, PipelineError> {
        g_minus.require_real()?;
        g_plus.require_real()?;
        Ok(Self { l_max: g_minus.l_max().max(g_plus.l_max()), g_minus, g_plus, real: true })
    }

    pub fn constant(c_minus: f64, c_plus: f64) -> Self {
        Self::new(SphereFunction::constant(c_minus), SphereFunction::constant(c_plus)).expect("real")
    }

    /// `g₋ = Y₁₀`, `g₊ = Y₂₀`.
    pub fn y10_y20() -> Self {
        Self::new(SphereFunction::ylm(1, 0), SphereFunction::ylm(2, 0)).expect("real")
    }

    /// Random real pair of band limit `l_max` plus a constant `offset`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, l_max: usize, offset: f64) -> Self {
        let make = |rng: &mut R| {
            let mut f = SphereFunction::random_real(rng, l_max, 0.5);
            f.coeffs_mut()[0] += Complex64::new(offset * (4.0 * PI).sqrt(), 0.0);
            f
        };
        let gm = make(rng);
        let gp = make(rng);
        Self::new(gm, gp).expect("real")
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        let doc: PairDocument = serde_json::from_str(s).map_err(|e| PipelineError::Parse(e.to_string()))?;
        let conv = |v: &[(i64, i64, f64, f64)]| {
            let e: Vec<_> = v.iter().map(|&(l, m, re, im)| (l, m, Complex64::new(re, im))).collect();
            SphereFunction::from_entries(doc.l, &e)
        };
        let gm = conv(&doc.g_minus)?;
        let gp = conv(&doc.g_plus)?;
        if doc.real {
            gm.require_real()?;
            gp.require_real()?;
        }
        Ok(Self { l_max: doc.l, g_minus: gm, g_plus: gp, real: doc.real })
    }

    pub fn to_json(&self) -> String {
        let doc = PairDocument {
            l: self.l_max,
            g_minus: entries(&self.g_minus),
            g_plus: entries(&self.g_plus),
            real: self.real,
        };
        serde_json::to_string(&doc).expect("serializable")
    }

    pub fn get(&self, s: Sign) -> &SphereFunction {
        match s {
            Sign::Plus => &self.g_plus,
            Sign::Minus => &self.g_minus,
        }
    }

    pub fn evaluators(&self) -> Result<PairEvaluators, PipelineError> {
        Ok(PairEvaluators { minus: RealEvaluator::new(&self.g_minus)?, plus: RealEvaluator::new(&self.g_plus)? })
    }
}

/// Fast pointwise evaluators for a real pair.
#[derive(Clone, Debug)]
pub struct PairEvaluators {
    pub minus: RealEvaluator,
    pub plus: RealEvaluator,
}

impl PairEvaluators {
    pub fn get(&self, s: Sign) -> &RealEvaluator {
        match s {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }
}

// ---------------------------------------------------------------------------
// f_±

/// `Φ_±^{−n} g(B_±)` at `p`.
pub fn f_pm_value(g: &dyn Density, p: &UnitTangent, sign: Sign, exponent: i32) -> f64 {
    let w = p.x + p.v * sign.value();
    let phi = w.0[0];
    g.value(&[w.0[1] / phi, w.0[2] / phi, w.0[3] / phi]) * phi.powi(-exponent)
}

/// `f_± = Φ_±^{−2} (g_± ∘ B_±)`.
pub fn f_pm_eval(pair: &BoundaryDensityPair, p: &UnitTangent, sign: Sign) -> Result<f64, PipelineError> {
    let g = RealEvaluator::new(pair.get(sign))?;
    Ok(f_pm_value(&g, p, sign, 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportResiduals {
    /// `max |(X − 2) f₋|`.
    pub flow_minus: f64,
    /// `max |(X + 2) f₊|`.
    pub flow_plus: f64,
    /// `max |U f₋|` over unstable directions.
    pub transverse_minus: f64,
    /// `max |U f₊|` over stable directions.
    pub transverse_plus: f64,
    pub samples: usize,
}

impl TransportResiduals {
    pub fn max(&self) -> f64 {
        self.flow_minus.max(self.flow_plus).max(self.transverse_minus).max(self.transverse_plus)
    }
}

pub const TRANSPORT_STEP: f64 = 1e-2;
pub const TRANSPORT_SAMPLE_RADIUS: f64 = 1.5;

/// Residuals of the transport equations for `Φ^{−exponent}`-weighted densities.
pub fn transport_residual_densities(
    g_minus: &dyn Density,
    g_plus: &dyn Density,
    samples: usize,
    seed: u64,
    exponent: i32,
) -> TransportResiduals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<UnitTangent> =
        (0..samples).map(|_| random_unit_tangent(&mut rng, TRANSPORT_SAMPLE_RADIUS)).collect();
    let h = TRANSPORT_STEP;
    let rows: Vec<[f64; 4]> = points
        .par_iter()
        .map(|p| {
            let fm = |q: &UnitTangent| f_pm_value(g_minus, q, Sign::Minus, exponent);
            let fp = |q: &UnitTangent| f_pm_value(g_plus, q, Sign::Plus, exponent);
            let dm = richardson(|t| [fm(&geodesic_flow(p, t))], h)[0];
            let dp = richardson(|t| [fp(&geodesic_flow(p, t))], h)[0];
            let flow_m = (dm - 2.0 * fm(p)).abs();
            let flow_p = (dp + 2.0 * fp(p)).abs();
            let frame = FrameQuadruple::from_unit_tangent(p);
            let (w1, w2) = tangent_frame(p);
            let (mut tm, mut tp) = (0.0f64, 0.0f64);
            for w in [w1, w2] {
                let unstable = SphereTangent::new_unchecked(*p, w, w);
                let stable = SphereTangent::new_unchecked(*p, w, -w);
                let cu = tangent_curve(&frame, &unstable).expect("unstable direction");
                let cs = tangent_curve(&frame, &stable).expect("stable direction");
                tm = tm.max(richardson(|t| [fm(&cu(t))], h)[0].abs());
                tp = tp.max(richardson(|t| [fp(&cs(t))], h)[0].abs());
            }
            [flow_m, flow_p, tm, tp]
        })
        .collect();
    let col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
    TransportResiduals {
        flow_minus: col(0),
        flow_plus: col(1),
        transverse_minus: col(2),
        transverse_plus: col(3),
        samples,
    }
}

/// Max residuals of `(X ± 2) f_±` and `U_± f_±` over seeded random unit tangents.
pub fn transport_residual(
    pair: &BoundaryDensityPair,
    samples: usize,
    seed: u64,
) -> Result<TransportResiduals, PipelineError> {
    let ev = pair.evaluators()?;
    Ok(transport_residual_densities(&ev.minus, &ev.plus, samples, seed, 2))
}

/// The same residuals with `Φ^{−1}` in place of `Φ^{−2}`.
pub fn corrupted_exponent_control(
    pair: &BoundaryDensityPair,
    samples: usize,
    seed: u64,
) -> Result<TransportResiduals, PipelineError> {
    let ev = pair.evaluators()?;
    Ok(transport_residual_densities(&ev.minus, &ev.plus, samples, seed, 1))
}

// ---------------------------------------------------------------------------
// σ_±

/// `σ_±(x) = ¼ ∫ g(ν) v_±(x, ν) dS(ν)` as a tangent vector at `x`.
pub struct SigmaField<'a> {
    density: &'a dyn Density,
    sign: Sign,
    grid: SphereGrid,
}

impl<'a> SigmaField<'a> {
    pub fn new(density: &'a dyn Density, sign: Sign, grid: SphereGrid) -> Result<Self, PipelineError> {
        if grid.is_empty() {
            return Err(PipelineError::InvalidGrid("empty sphere grid".into()));
        }
        Ok(Self { density, sign, grid })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn eval(&self, x: &H3Point) -> MinkowskiVector {
        let xc = x.coords();
        let mut acc = MinkowskiVector::ZERO;
        for n in &self.grid.nodes {
            let lift = MinkowskiVector::from_parts(1.0, n.nu);
            let p = 1.0 / mink_inner(xc, &lift);
            acc += (lift * p - *xc) * (n.weight * self.density.value(&n.nu));
        }
        acc * (0.25 * self.sign.value())
    }

    /// `|⟨σ(x), x⟩_M|`.
    pub fn tangency_defect(&self, x: &H3Point) -> f64 {
        mink_inner(&self.eval(x), x.coords()).abs()
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(|n| self.density.value(&n.nu))
    }
}

pub fn sigma_pm_eval(
    pair: &BoundaryDensityPair,
    x: &H3Point,
    sign: Sign,
    grid: &SphereGrid,
) -> Result<MinkowskiVector, PipelineError> {
    let g = RealEvaluator::new(pair.get(sign))?;
    Ok(SigmaField::new(&g, sign, grid.clone())?.eval(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityReport {
    /// `max |(dσ)_ij|` in the chart.
    pub curl: f64,
    /// `div σ = −δσ`.
    pub divergence: f64,
    /// `∓½ ∫ g dS`.
    pub predicted_divergence: f64,
}

/// Finite-difference `dσ` and `div σ` at `x` in the chart
/// `u ↦ B_x(√(1+|u|²), u)`, where the metric is `δ − uuᵀ/(1+|u|²)`.
pub fn sigma_harmonicity(field: &SigmaField, x: &H3Point, h: f64) -> HarmonicityReport {
    let b = boost_from_origin(x);
    let chart = |u: [f64; 3]| -> ([f64; 3], [f64; 3]) {
        let q = 1.0 + dot3(&u, &u);
        let r = q.sqrt();
        let y = H3Point::normalized(MinkowskiVector::new(r, u[0], u[1], u[2]).transform(&b));
        let s = field.eval(&y);
        let comp: [f64; 3] = std::array::from_fn(|i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let dy = MinkowskiVector::new(u[i] / r, e[0], e[1], e[2]).transform(&b);
            g_inner(&s, &dy)
        });
        let du = dot3(&u, &comp);
        let vol = 1.0 / r;
        let vec: [f64; 3] = std::array::from_fn(|i| vol * (comp[i] + u[i] * du));
        (comp, vec)
    };
    let along = |i: usize, t: f64| {
        let mut u = [0.0; 3];
        u[i] = t;
        u
    };
    let mut dcomp = [[0.0; 3]; 3];
    let mut div = 0.0;
    for i in 0..3 {
        let d = richardson(
            |t| {
                let (c, v) = chart(along(i, t));
                [c[0], c[1], c[2], v[i]]
            },
            h,
        );
        dcomp[i] = [d[0], d[1], d[2]];
        div += d[3];
    }
    let mut curl: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            curl = curl.max((dcomp[i][j] - dcomp[j][i]).abs());
        }
    }
    HarmonicityReport { curl, divergence: div, predicted_divergence: -0.5 * field.sign.value() * field.mass() }
}

// ---------------------------------------------------------------------------
// Forms on SH³ and the pushforward

/// A smooth pointwise k-form on `SH³`: evaluated on k tangent vectors at a common base.
pub trait FormField: Sync {
    fn degree(&self) -> usize;
    fn eval(&self, vectors: &[SphereTangent]) -> f64;
}

impl<F: FormField + ?Sized> FormField for &F {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, vectors: &[SphereTangent]) -> f64 {
        (**self).eval(vectors)
    }
}

impl<F: FormField + ?Sized + Send> FormField for Box<F> {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, vectors: &[SphereTangent]) -> f64 {
        (**self).eval(vectors)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactForm {
    Alpha,
    DAlpha,
    Psi,
    OmegaPlus,
    OmegaMinus,
}

impl FormField for ContactForm {
    fn degree(&self) -> usize {
        match self {
            ContactForm::Alpha => 1,
            _ => 2,
        }
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        let kind = match self {
            ContactForm::Alpha => return alpha(&v[0]),
            ContactForm::DAlpha => TwoFormKind::DAlpha,
            ContactForm::Psi => TwoFormKind::Psi,
            ContactForm::OmegaPlus => TwoFormKind::OmegaPlus,
            ContactForm::OmegaMinus => TwoFormKind::OmegaMinus,
        };
        two_form_eval(kind, &v[0], &v[1])
    }
}

/// `ω₁ ∧ ω₂ ∧ …`, evaluated by the shuffle formula.
pub struct Wedge<'a> {
    factors: Vec<Box<dyn FormField + Send + 'a>>,
}

impl<'a> Wedge<'a> {
    pub fn new(factors: Vec<Box<dyn FormField + Send + 'a>>) -> Self {
        Self { factors }
    }
}

fn wedge_eval(factors: &[Box<dyn FormField + Send + '_>], v: &[SphereTangent]) -> f64 {
    match factors {
        [] => 1.0,
        [f] => f.eval(v),
        [f, rest @ ..] => {
            let (n, p) = (v.len(), f.degree());
            let mut total = 0.0;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != p {
                    continue;
                }
                let mut inv = 0usize;
                let (mut a, mut b) = (Vec::with_capacity(p), Vec::with_capacity(n - p));
                for (i, vi) in v.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        inv += i - a.len();
                        a.push(*vi);
                    } else {
                        b.push(*vi);
                    }
                }
                let s = if inv % 2 == 0 { 1.0 } else { -1.0 };
                total += s * f.eval(&a) * wedge_eval(rest, &b);
            }
            total
        }
    }
}

impl FormField for Wedge<'_> {
    fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.degree()).sum()
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        wedge_eval(&self.factors, v)
    }
}

/// `dvol_α = α ∧ dα ∧ dα`.
pub fn dvol_alpha() -> Wedge<'static> {
    Wedge::new(vec![Box::new(ContactForm::Alpha), Box::new(ContactForm::DAlpha), Box::new(ContactForm::DAlpha)])
}

/// `J*ω` for the antipodal map `J(x, v) = (x, −v)`.
pub struct JPullback<F>(pub F);

impl<F: FormField> FormField for JPullback<F> {
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        let w: Vec<SphereTangent> = v.iter().map(antipodal_differential).collect();
        self.0.eval(&w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Mode {
    k: [f64; 8],
    phase: f64,
    amp: f64,
}

impl Mode {
    fn random<R: Rng + ?Sized>(rng: &mut R, freq: f64) -> Self {
        let k = std::array::from_fn(|_| freq * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng));
        Self { k, phase: rng.random_range(0.0..2.0 * PI), amp: StandardNormal.sample(rng) }
    }

    fn eval(&self, z: &[f64; 8]) -> f64 {
        let t: f64 = self.k.iter().zip(z).map(|(a, b)| a * b).sum();
        self.amp * (t + self.phase).sin()
    }
}

fn base_coords(p: &UnitTangent) -> [f64; 8] {
    let mut z = [0.0; 8];
    z[..4].copy_from_slice(&p.x.0);
    z[4..].copy_from_slice(&p.v.0);
    z
}

/// Restriction to `SH³` of a smooth ambient 1-form `Σ U_a(z) dz^a` on `R⁸`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientOneForm {
    comps: Vec<Vec<Mode>>,
}

impl AmbientOneForm {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { comps: (0..8).map(|_| (0..2).map(|_| Mode::random(rng, 0.4)).collect()).collect() }
    }

    /// `Σ U_a(z) w^a`.
    pub fn apply(&self, z: &[f64; 8], w: &[f64; 8]) -> f64 {
        self.comps.iter().zip(w).map(|(c, wa)| wa * c.iter().map(|m| m.eval(z)).sum::<f64>()).sum()
    }

    /// Ambient finite-difference exterior derivative.
    pub fn exterior_derivative_fd(&self, h: f64) -> FdExteriorDerivative<'_> {
        FdExteriorDerivative { form: self, h }
    }
}

impl FormField for AmbientOneForm {
    fn degree(&self) -> usize {
        1
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        self.apply(&base_coords(&v[0].base), &v[0].ambient())
    }
}

/// `dU(ξ, η) = ∂_ξ(U·η) − ∂_η(U·ξ)` by Richardson central differences.
pub struct FdExteriorDerivative<'a> {
    form: &'a AmbientOneForm,
    h: f64,
}

impl FormField for FdExteriorDerivative<'_> {
    fn degree(&self) -> usize {
        2
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        let z = base_coords(&v[0].base);
        let (a, b) = (v[0].ambient(), v[1].ambient());
        let shifted = |dir: &[f64; 8], t: f64| -> [f64; 8] { std::array::from_fn(|i| z[i] + t * dir[i]) };
        let da = richardson(|t| [self.form.apply(&shifted(&a, t), &b)], self.h)[0];
        let db = richardson(|t| [self.form.apply(&shifted(&b, t), &a)], self.h)[0];
        da - db
    }
}

/// Restriction of a smooth ambient 2-form `Σ_{a<b} W_ab dz^a ∧ dz^b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientTwoForm {
    comps: Vec<(usize, usize, Mode)>,
}

impl AmbientTwoForm {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut comps = Vec::new();
        for a in 0..8 {
            for b in a + 1..8 {
                comps.push((a, b, Mode::random(rng, 0.4)));
            }
        }
        Self { comps }
    }
}

impl FormField for AmbientTwoForm {
    fn degree(&self) -> usize {
        2
    }

    fn eval(&self, v: &[SphereTangent]) -> f64 {
        let z = base_coords(&v[0].base);
        let (x, y) = (v[0].ambient(), v[1].ambient());
        self.comps.iter().map(|(a, b, m)| m.eval(&z) * (x[*a] * y[*b] - x[*b] * y[*a])).sum()
    }
}

/// `(π_Σ* ω)(w₁, …, w_{k−2})(x) = ∫_{S_x H³} ω(w̃₁, …, w̃_{k−2}, V_θ, V_φ)`,
/// with horizontal lifts `w̃` and the vertical frame `(V_θ, V_φ)` oriented so
/// that `(v, V_θ, V_φ)` is positive.
pub fn fiber_pushforward(
    form: &dyn FormField,
    x: &H3Point,
    tests: &[MinkowskiVector],
    grid: &SphereGrid,
) -> Result<f64, PipelineError> {
    let k = form.degree();
    if !(2..=5).contains(&k) {
        return Err(PipelineError::Degree(k));
    }
    if tests.len() != k - 2 {
        return Err(PipelineError::TestVectors { expected: k - 2, got: tests.len() });
    }
    for w in tests {
        let d = mink_inner(w, x.coords()).abs() / (1.0 + w.max_abs() * x.coords().max_abs());
        if d > 1e-10 {
            return Err(PipelineError::NotTangent(d));
        }
    }
    if grid.n_polar < 2 || grid.n_azimuth < 3 {
        return Err(PipelineError::InvalidGrid(format!("fiber grid {}x{}", grid.n_polar, grid.n_azimuth)));
    }
    let b = boost_from_origin(x);
    let lift = |a: &[f64; 3]| MinkowskiVector::from_parts(0.0, *a).transform(&b);
    let vals: Vec<f64> = grid
        .nodes
        .par_iter()
        .map(|n| {
            let p = UnitTangent { x: *x.coords(), v: lift(&n.nu) };
            let mut vs: Vec<SphereTangent> = tests.iter().map(|w| horizontal_lift(&p, w)).collect();
            vs.push(vertical_lift(&p, &lift(&n.e_theta)));
            vs.push(vertical_lift(&p, &lift(&n.e_phi)));
            n.weight * form.eval(&vs)
        })
        .collect();
    Ok(vals.iter().sum())
}

/// [`fiber_pushforward`] cross-checked against a grid coarsened by 3/4.
pub fn fiber_pushforward_checked(
    form: &dyn FormField,
    x: &H3Point,
    tests: &[MinkowskiVector],
    grid: &SphereGrid,
    rtol: f64,
) -> Result<f64, PipelineError> {
    let value = fiber_pushforward(form, x, tests, grid)?;
    let coarse_grid = SphereGrid::new((3 * grid.n_polar).div_ceil(4), (3 * grid.n_azimuth).div_ceil(4));
    let coarse = fiber_pushforward(form, x, tests, &coarse_grid)?;
    if (value - coarse).abs() > rtol * value.abs().max(1.0) {
        return Err(PipelineError::UnderResolved { value, coarse });
    }
    Ok(value)
}

// ---------------------------------------------------------------------------
// F

#[inline]
fn pair_integrand(gm: &dyn Density, gp: &dyn Density, x: &MinkowskiVector, v: &MinkowskiVector) -> f64 {
    let a = *x + *v;
    let b = *x - *v;
    let (pp, pm) = (a.0[0], b.0[0]);
    let bp = [a.0[1] / pp, a.0[2] / pp, a.0[3] / pp];
    let bm = [b.0[1] / pm, b.0[2] / pm, b.0[3] / pm];
    gm.value(&bm) * gp.value(&bp) / (pm * pp).powi(2)
}

/// `F(y) = ¼ ∫_{S_y H³} (Φ₋Φ₊)^{−2} g₋(B₋) g₊(B₊) dS(v)` on a product fiber grid.
pub fn f_field_on_grid(gm: &dyn Density, gp: &dyn Density, y: &H3Point, grid: &SphereGrid) -> f64 {
    let b = boost_from_origin(y);
    let x = y.coords();
    0.25 * grid.integrate(|n| pair_integrand(gm, gp, x, &MinkowskiVector::from_parts(0.0, n.nu).transform(&b)))
}

/// `F(y)` for a band-limited pair on a product fiber grid.
#[allow(non_snake_case)]
pub fn F_eval(pair: &BoundaryDensityPair, y: &H3Point, grid: &SphereGrid) -> Result<f64, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::InvalidGrid("empty fiber grid".into()));
    }
    let ev = pair.evaluators()?;
    Ok(f_field_on_grid(&ev.minus, &ev.plus, y, grid))
}

/// Fiber rule aligned with the radial direction of `y`: the fiber direction
/// `u = −tanh τ ŷ + sech τ (cos φ e₁ + sin φ e₂)`, `dS = sech²τ dτ dφ`, which
/// resolves the two caps where `B_±` leave the neighbourhood of `ŷ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedFiberRule {
    pub panel_nodes: usize,
    pub margin: f64,
    pub n_azimuth: usize,
}

impl AlignedFiberRule {
    pub fn for_band(l_max: usize) -> Self {
        Self { panel_nodes: 12, margin: 14.0, n_azimuth: 2 * l_max + 2 }
    }

    pub fn tau_rule(&self, rho: f64) -> Rule1d {
        let c = rho + 3.0;
        let n = (2.0 * c).ceil() as usize;
        let mut right = vec![c];
        let mut w = 1.0;
        while *right.last().expect("nonempty") < rho + self.margin {
            let next = (right.last().expect("nonempty") + w).min(rho + self.margin);
            right.push(next);
            w *= 2.0;
        }
        let mut breaks: Vec<f64> = right.iter().rev().map(|t| -t).collect();
        breaks.pop();
        breaks.extend((0..=n).map(|i| -c + 2.0 * c * i as f64 / n as f64));
        breaks.extend(right.iter().skip(1));
        Rule1d::composite(&breaks, self.panel_nodes)
    }
}

struct AlignedFiber {
    tau: Vec<(f64, f64, f64)>,
    trig: Vec<(f64, f64)>,
    dphi: f64,
}

impl AlignedFiber {
    fn new(rule: &AlignedFiberRule, rho: f64) -> Self {
        let r = rule.tau_rule(rho);
        let tau = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(t, w)| {
                let s = 1.0 / t.cosh();
                (-t.tanh(), s, w * s * s)
            })
            .collect();
        let n = rule.n_azimuth.max(1);
        let dphi = 2.0 * PI / n as f64;
        let trig = (0..n).map(|k| ((k as f64 + 0.5) * dphi).sin_cos()).map(|(s, c)| (c, s)).collect();
        Self { tau, trig, dphi }
    }

    /// `F` at `(cosh ρ, sinh ρ ŷ)`.
    fn eval(&self, gm: &dyn Density, gp: &dyn Density, rho: f64, yhat: &[f64; 3]) -> f64 {
        let (e1, e2) = complete_frame3(yhat);
        let (sh, ch) = (rho.sinh(), rho.cosh());
        let x = MinkowskiVector::from_parts(ch, [sh * yhat[0], sh * yhat[1], sh * yhat[2]]);
        let mut total = 0.0;
        for &(ct, st, wt) in &self.tau {
            let mut acc = 0.0;
            for &(c, s) in &self.trig {
                // boost of (0, u) along ŷ: u·ŷ = ct
                let perp: [f64; 3] = std::array::from_fn(|i| st * (c * e1[i] + s * e2[i]));
                let along = ct * ch;
                let v = MinkowskiVector::from_parts(
                    sh * ct,
                    std::array::from_fn(|i| perp[i] + along * yhat[i]),
                );
                acc += pair_integrand(gm, gp, &x, &v);
            }
            total += wt * acc;
        }
        0.25 * total * self.dphi
    }
}

/// `F(y)` on the aligned fiber rule.
pub fn f_field_aligned(gm: &dyn Density, gp: &dyn Density, y: &H3Point, rule: &AlignedFiberRule) -> f64 {
    let s = y.coords().spatial();
    let n = dot3(&s, &s).sqrt();
    let rho = n.asinh();
    let yhat = if n > 0.0 { [s[0] / n, s[1] / n, s[2] / n] } else { [0.0, 0.0, 1.0] };
    AlignedFiber::new(rule, rho).eval(gm, gp, rho, &yhat)
}

/// `ψ_ε(r)`; requires `ε > 0`, `r > 0`.
pub fn psi_eps_eval(eps: f64, r: f64) -> Result<f64, PipelineError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PipelineError::InvalidEps(eps));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(PipelineError::InvalidGrid(format!("r = {r} must be positive")));
    }
    Ok(psi_eps(eps, r))
}

// ---------------------------------------------------------------------------
// Main identity

/// Polar quadrature on `H³` for the regularized bulk integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkGrid {
    /// Gauss nodes per unit panel where `χ(ε y₀) = 1`.
    pub flat_nodes: usize,
    /// Panels uniform in the cutoff argument `ε y₀ ∈ [1, 2]`.
    pub transition_panels: usize,
    pub transition_nodes: usize,
    pub direction_polar: usize,
    pub direction_azimuth: usize,
    pub fiber: AlignedFiberRule,
}

impl BulkGrid {
    pub fn for_band(l_max: usize) -> Self {
        Self {
            flat_nodes: 8,
            transition_panels: 8,
            transition_nodes: 8,
            direction_polar: l_max + 1,
            direction_azimuth: 2 * l_max + 1,
            fiber: AlignedFiberRule::for_band(l_max),
        }
    }

    /// Gauss rule in `ρ` on the support of `χ(ε cosh ρ)`.
    pub fn radial_rule(&self, eps: f64) -> Rule1d {
        let s0 = eps.max(1.0);
        if s0 >= 2.0 {
            return Rule1d { nodes: vec![], weights: vec![] };
        }
        let flat_end = (s0 / eps).acosh();
        let mut rule = Rule1d { nodes: vec![], weights: vec![] };
        if flat_end > 0.0 {
            let m = flat_end.ceil() as usize;
            let breaks: Vec<f64> = (0..=m).map(|i| flat_end * i as f64 / m as f64).collect();
            rule = Rule1d::composite(&breaks, self.flat_nodes);
        }
        let np = self.transition_panels.max(1);
        let breaks: Vec<f64> =
            (0..=np).map(|k| ((s0 + (2.0 - s0) * k as f64 / np as f64) / eps).acosh()).collect();
        let t = Rule1d::composite(&breaks, self.transition_nodes);
        rule.nodes.extend(t.nodes);
        rule.weights.extend(t.weights);
        rule
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainIdentityGrids {
    /// Outer product grid in `ν₋`.
    pub outer_polar: usize,
    pub outer_azimuth: usize,
    /// Inner polar grid around `ν₋`: azimuth count and Gauss nodes per panel in `|ν₋ − ν₊|²`.
    pub inner_azimuth: usize,
    pub inner_nodes: usize,
    /// Product grid used for the unregularized double integral.
    pub rhs_polar: usize,
    pub rhs_azimuth: usize,
    /// Grid for `σ_±`.
    pub sigma_polar: usize,
    pub sigma_azimuth: usize,
    pub fd_step: f64,
    pub bulk: BulkGrid,
    /// The bulk integral is evaluated only for `ε ≥ bulk_min_eps`.
    pub bulk_min_eps: f64,
}

impl MainIdentityGrids {
    pub fn for_band(l_max: usize) -> Self {
        Self {
            outer_polar: l_max + 2,
            outer_azimuth: 2 * l_max + 3,
            inner_azimuth: 2 * l_max + 2,
            inner_nodes: 16,
            rhs_polar: l_max + 3,
            rhs_azimuth: 2 * l_max + 5,
            sigma_polar: l_max + 16,
            sigma_azimuth: 2 * l_max + 32,
            fd_step: 1e-3,
            bulk: BulkGrid::for_band(l_max),
            bulk_min_eps: 0.25,
        }
    }

    /// Reject grids too coarse to integrate degree-`l_max` data exactly.
    pub fn validate(&self, l_max: usize) -> Result<(), PipelineError> {
        let checks = [
            ("outer", SphereGrid::new(self.outer_polar, self.outer_azimuth).exact_degree() >= l_max),
            ("rhs", SphereGrid::new(self.rhs_polar, self.rhs_azimuth).exact_degree() >= l_max + 1),
            ("inner", self.inner_azimuth > l_max && self.inner_nodes >= 2),
            ("bulk directions", SphereGrid::new(self.bulk.direction_polar, self.bulk.direction_azimuth).exact_degree() >= l_max),
            ("bulk fiber", self.bulk.fiber.n_azimuth > 2 * l_max && self.bulk.fiber.panel_nodes >= 2),
            ("sigma", self.sigma_polar >= 2 && self.sigma_azimuth >= 3),
            ("fd step", self.fd_step > 0.0 && self.fd_step < 0.1),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(PipelineError::InvalidGrid(format!("{name} grid too coarse for L = {l_max}")));
            }
        }
        Ok(())
    }
}

/// `(1/48) ∫∫ (1 − ν₋·ν₊)² g₋ g₊ dS dS` on a product grid.
pub fn rhs_double_integral(gm: &dyn Density, gp: &dyn Density, grid: &SphereGrid) -> f64 {
    double_integral(grid, |nu| gm.value(nu), |nu| gp.value(nu))
}

fn double_integral(grid: &SphereGrid, a: impl Fn(&[f64; 3]) -> f64, b: impl Fn(&[f64; 3]) -> f64) -> f64 {
    let av: Vec<f64> = grid.nodes.iter().map(|n| n.weight * a(&n.nu)).collect();
    let bv: Vec<f64> = grid.nodes.iter().map(|n| n.weight * b(&n.nu)).collect();
    let rows: Vec<f64> = grid
        .nodes
        .par_iter()
        .zip(&av)
        .map(|(n, wa)| {
            let s: f64 = grid
                .nodes
                .iter()
                .zip(&bv)
                .map(|(m, wb)| {
                    let t = 1.0 - dot3(&n.nu, &m.nu);
                    t * t * wb
                })
                .sum();
            wa * s
        })
        .collect();
    rows.iter().sum::<f64>() / 48.0
}

/// Breaks in `r = |ν₋ − ν₊|² ∈ [ε², 4]`, fine across the transition of `ψ_ε`.
fn inner_breaks(eps: f64) -> Vec<f64> {
    let e2 = eps * eps;
    let mut b = Vec::new();
    for k in 0..=24 {
        let r = e2 * (1.0 + k as f64 / 8.0);
        if r >= 4.0 {
            break;
        }
        b.push(r);
    }
    let mut r = *b.last().expect("ε² < 4");
    loop {
        r *= 2.0;
        if r >= 4.0 {
            b.push(4.0);
            break;
        }
        b.push(r);
    }
    b
}

/// `I_ε = (1/48) ∫∫ ψ_ε(|ν₋ − ν₊|²)(1 − ν₋·ν₊)² g₋(ν₋) g₊(ν₊)`, with a polar
/// grid around each outer node `ν₋`.
pub fn lhs_boundary(gm: &dyn Density, gp: &dyn Density, eps: f64, grids: &MainIdentityGrids) -> f64 {
    if eps * eps >= 4.0 {
        return 0.0;
    }
    let rule = Rule1d::composite(&inner_breaks(eps), grids.inner_nodes);
    let radial: Vec<(f64, f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(r, w)| {
            let c = 1.0 - 0.5 * r;
            let s = (r - 0.25 * r * r).max(0.0).sqrt();
            (c, s, psi_eps(eps, *r) * 0.25 * r * r * 0.5 * w)
        })
        .collect();
    let na = grids.inner_azimuth;
    let dphi = 2.0 * PI / na as f64;
    let trig: Vec<(f64, f64)> = (0..na).map(|k| ((k as f64 + 0.5) * dphi).sin_cos()).collect();
    let outer = SphereGrid::new(grids.outer_polar, grids.outer_azimuth);
    let vals: Vec<f64> = outer
        .nodes
        .par_iter()
        .map(|n| {
            let (a, b) = complete_frame3(&n.nu);
            let mut inner = 0.0;
            for &(c, s, w) in &radial {
                let mut acc = 0.0;
                for &(sp, cp) in &trig {
                    let nu: [f64; 3] = std::array::from_fn(|i| c * n.nu[i] + s * (cp * a[i] + sp * b[i]));
                    acc += gp.value(&nu);
                }
                inner += w * acc;
            }
            n.weight * gm.value(&n.nu) * inner * dphi
        })
        .collect();
    vals.iter().sum::<f64>() / 48.0
}

/// `∫ χ(ε y₀) y₀^{−4} F(y) dvol(y)` in polar coordinates about `e₀`.
pub fn lhs_bulk(gm: &dyn Density, gp: &dyn Density, eps: f64, grid: &BulkGrid) -> f64 {
    let radial = grid.radial_rule(eps);
    let dirs = SphereGrid::new(grid.direction_polar, grid.direction_azimuth);
    let vals: Vec<f64> = radial
        .nodes
        .par_iter()
        .zip(&radial.weights)
        .map(|(rho, w)| {
            let (ch, sh) = (rho.cosh(), rho.sinh());
            let weight = w * chi(eps * ch) * sh * sh / ch.powi(4);
            if weight == 0.0 {
                return 0.0;
            }
            let fiber = AlignedFiber::new(&grid.fiber, *rho);
            weight * dirs.integrate(|d| fiber.eval(gm, gp, *rho, &d.nu))
        })
        .collect();
    vals.iter().sum()
}

/// `−(1/6) Δ(σ₋·σ₊)(e₀)` by the finite-difference Laplacian.
pub fn rhs_fd(gm: &dyn Density, gp: &dyn Density, grids: &MainIdentityGrids) -> Result<f64, PipelineError> {
    let grid = SphereGrid::new(grids.sigma_polar, grids.sigma_azimuth);
    let sm = SigmaField::new(gm, Sign::Minus, grid.clone())?;
    let sp = SigmaField::new(gp, Sign::Plus, grid)?;
    let f = |x: &H3Point| g_inner(&sm.eval(x), &sp.eval(x));
    Ok(-laplacian_fd(&f, &H3Point::origin(), grids.fd_step) / 6.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRow {
    pub eps: f64,
    pub lhs_boundary: f64,
    pub lhs_bulk: Option<f64>,
    /// `|lhs_bulk − lhs_boundary| / scale`.
    pub bulk_residual: Option<f64>,
    /// `|lhs_boundary − rhs| / scale`.
    pub boundary_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainIdentityReport {
    pub l_max: usize,
    pub grids: MainIdentityGrids,
    /// `(1/48) ∫∫ (1 − ν₋·ν₊)² |g₋||g₊|`, the denominator of all relative residuals.
    pub scale: f64,
    pub rhs: f64,
    pub rhs_fd: f64,
    /// `|rhs − rhs_fd| / scale`.
    pub fd_residual: f64,
    pub eps_min: f64,
    /// `boundary_residual` at `eps_min`.
    pub identity_residual: f64,
    pub max_bulk_residual: Option<f64>,
    /// `|lhs_boundary − rhs|` non-increasing as `ε` decreases.
    pub monotone: bool,
    pub rows: Vec<EpsRow>,
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

pub fn main_identity_check(
    pair: &BoundaryDensityPair,
    eps_list: &[f64],
    grids: &MainIdentityGrids,
) -> Result<MainIdentityReport, PipelineError> {
    if eps_list.is_empty() {
        return Err(PipelineError::InvalidGrid("empty ε list".into()));
    }
    if let Some(&e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(PipelineError::InvalidEps(e));
    }
    grids.validate(pair.l_max)?;
    let ev = pair.evaluators()?;
    let (gm, gp) = (&ev.minus, &ev.plus);
    let rgrid = SphereGrid::new(grids.rhs_polar, grids.rhs_azimuth);
    let rhs = rhs_double_integral(gm, gp, &rgrid);
    let scale = double_integral(&rgrid, |nu| gm.eval(nu).abs(), |nu| gp.eval(nu).abs());
    let fd = rhs_fd(gm, gp, grids)?;
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let rows: Vec<EpsRow> = eps_sorted
        .iter()
        .map(|&eps| {
            let lb = lhs_boundary(gm, gp, eps, grids);
            let bulk = (eps >= grids.bulk_min_eps).then(|| lhs_bulk(gm, gp, eps, &grids.bulk));
            EpsRow {
                eps,
                lhs_boundary: lb,
                lhs_bulk: bulk,
                bulk_residual: bulk.map(|b| relative(b, lb, scale)),
                boundary_residual: relative(lb, rhs, scale),
            }
        })
        .collect();
    let last = rows.last().expect("nonempty");
    let monotone = rows.windows(2).all(|w| {
        (w[1].lhs_boundary - rhs).abs() <= (w[0].lhs_boundary - rhs).abs() + 1e-14 * scale.max(1e-300)
    });
    let max_bulk = rows.iter().filter_map(|r| r.bulk_residual).reduce(f64::max);
    Ok(MainIdentityReport {
        l_max: pair.l_max,
        grids: *grids,
        scale,
        rhs,
        rhs_fd: fd,
        fd_residual: relative(rhs, fd, scale),
        eps_min: last.eps,
        identity_residual: last.boundary_residual,
        max_bulk_residual: max_bulk,
        monotone,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::point_frame;

    #[test]
    fn pushforward_constants() {
        let grid = SphereGrid::new(12, 24);
        let x = H3Point::from_polar(0.7, [0.6, 0.0, 0.8]);
        let psi = fiber_pushforward(&ContactForm::Psi, &x, &[], &grid).unwrap();
        assert!((psi + 4.0 * PI).abs() < 1e-12, "{psi}");
        let frame = point_frame(&x);
        let vol = fiber_pushforward(&dvol_alpha(), &x, &frame, &grid).unwrap();
        assert!((vol + 8.0 * PI).abs() < 1e-11, "{vol}");
        assert!(matches!(
            fiber_pushforward(&ContactForm::Alpha, &x, &[], &grid),
            Err(PipelineError::Degree(1))
        ));
    }

    #[test]
    fn f_plus_constant_at_standard() {
        let pair = BoundaryDensityPair::constant(1.0, 1.0);
        let v = f_pm_eval(&pair, &UnitTangent::standard(), Sign::Plus).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_constant_is_pi_at_origin() {
        let pair = BoundaryDensityPair::constant(1.0, 1.0);
        let f = F_eval(&pair, &H3Point::origin(), &SphereGrid::new(8, 8)).unwrap();
        assert!((f - PI).abs() < 1e-13);
    }

    #[test]
    fn aligned_and_product_fiber_rules_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = BoundaryDensityPair::random(&mut rng, 4, 0.5);
        let ev = pair.evaluators().unwrap();
        for (r, n) in [(0.0, [0.0, 0.0, 1.0]), (0.8, [0.6, 0.0, 0.8]), (1.6, [0.0, 1.0, 0.0])] {
            let y = H3Point::from_polar(r, n);
            let a = f_field_aligned(&ev.minus, &ev.plus, &y, &AlignedFiberRule::for_band(4));
            let b = f_field_on_grid(&ev.minus, &ev.plus, &y, &SphereGrid::new(96, 192));
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{r}: {a} {b}");
        }
    }

    #[test]
    fn pair_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pair = BoundaryDensityPair::random(&mut rng, 3, 0.0);
        let back = BoundaryDensityPair::from_json(&pair.to_json()).unwrap();
        assert_eq!(pair, back);
        assert!(matches!(BoundaryDensityPair::from_json("{\"L\": 1"), Err(PipelineError::Parse(_))));
        let complex = r#"{"L": 1, "g_minus": [[1, 1, 1.0, 0.0]], "g_plus": []}"#;
        assert!(matches!(BoundaryDensityPair::from_json(complex), Err(PipelineError::Harmonics(_))));
    }

    #[test]
    fn inner_breaks_cover_support() {
        for eps in [1.5, 0.5, 2f64.powi(-6)] {
            let b = inner_breaks(eps);
            assert_eq!(b[0], eps * eps);
            assert_eq!(*b.last().unwrap(), 4.0);
            assert!(b.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
