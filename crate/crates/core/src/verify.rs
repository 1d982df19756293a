//! Named residual checks grouped into suites, shared by the command-line
//! runner and the acceptance harness.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{b_pm, boundary_maps, mobius_action, xi_forward, xi_inverse, xi_jacobian, xi_jacobian_fd, Sign};
use crate::exterior_core::{find_invertible_in_subspace, numerical_rank, MatrixSubspace};
use crate::frame_bundle::{commutator_table, forms, Coframe, CoframePolynomial, FieldTag, Rational};
use crate::hyperboloid::{
    laplacian_fd, orientation, random_lorentz, random_point, random_tangent_at, random_unit_tangent,
    H3Point,
};
use crate::invariant_forms::{identity_suite, NUMERIC_IDS};
use crate::pushforward_pipeline::{
    dvol_alpha, fiber_pushforward, main_identity_check, transport_residual,
    BoundaryDensityPair, ContactForm, FormField, MainIdentityGrids, MainIdentityReport, PipelineError,
    TransportResiduals, Wedge, DEFAULT_FIBER_GRID,
};
use crate::qs_radial::{
    intertwining_residual, q_s_apply_at_origin, radial_laplacian, GaussianDistanceProfile, PowerProfile, QsConfig,
    QsError, RadialProfile, RadialTestFunction,
};
use crate::quadrature::{dot3, sub3, SphereGrid};
use crate::sphere_conv::{
    funk_hecke_spectrum, kappa_eps, kappa_tilde, log_log_slope, regularization_norm_decay, schur_bound, BandCap,
    DecayTable, SampleKernel,
};
use crate::zeta_series::{
    betti_table, log_ruelle_graded, log_ruelle_product, max_expansion_rate, ruelle_order, synthetic_spectrum,
    ClosedGeodesicRecord, MultiplicityCase, MultiplicityTable, ZetaError,
};

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "identities")]
    Identities,
    #[serde(rename = "boundary")]
    Boundary,
    #[serde(rename = "qs")]
    Qs,
    #[serde(rename = "sphereconv")]
    SphereConv,
    #[serde(rename = "main-identity")]
    MainIdentity,
    #[serde(rename = "zeta")]
    Zeta,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Identities, Suite::Boundary, Suite::Qs, Suite::SphereConv, Suite::MainIdentity, Suite::Zeta];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Boundary => "boundary",
            Suite::Qs => "qs",
            Suite::SphereConv => "sphereconv",
            Suite::MainIdentity => "main-identity",
            Suite::Zeta => "zeta",
        }
    }

    /// Check kinds with their statement and default tolerance.
    pub fn kinds(self) -> &'static [CheckKind] {
        match self {
            Suite::Identities => IDENTITY_KINDS,
            Suite::Boundary => BOUNDARY_KINDS,
            Suite::Qs => QS_KINDS,
            Suite::SphereConv => SPHERE_KINDS,
            Suite::MainIdentity => MAIN_KINDS,
            Suite::Zeta => ZETA_KINDS,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckKind {
    pub id: &'static str,
    pub paper_ref: &'static str,
    pub tolerance: f64,
}

const fn kind(id: &'static str, paper_ref: &'static str, tolerance: f64) -> CheckKind {
    CheckKind { id, paper_ref, tolerance }
}

const IDENTITY_KINDS: &[CheckKind] = &[
    kind("structure_constants", "[X,U±]=±U±, [U_i+,U_i-]=2X, [U_1±,U_2∓]=2R, [R,U_1±]=-U_2±, [R,U_2±]=U_1±", 0.0),
    kind("d_alpha", "dα = 2(U1+*∧U1-* + U2+*∧U2-*) from the commutators", 0.0),
    kind("d_r_star", "dR* from the commutators", 0.0),
    kind("d_u_star", "dU_i±* from the commutators", 0.0),
    kind("d_psi", "dψ = 0", 0.0),
    kind("psi_wedge_psi", "ψ∧ψ = dα∧dα", 0.0),
    kind("dalpha_wedge_psi", "dα∧ψ = 0", 0.0),
    kind("d_omega_plus", "dω+ = 2α∧ω+", 0.0),
    kind("d_omega_minus", "dω- = -2α∧ω-", 0.0),
    kind("lie_x_psi", "L_X ψ = 0", 0.0),
    kind("a_cross_product", "g(x×v×w1,w2)g(x×v×w3,w4) = g(w1,w3)g(w2,w4) - g(w2,w3)g(w1,w4)", 1e-10),
    kind("b_psi_psi", "ψ∧ψ = dα∧dα on random frames", 1e-10),
    kind("c_dalpha_psi", "dα∧ψ = 0 on random frames", 1e-10),
    kind("e_dalpha_beta", "dα∧β = ψ∧I*β for ι_Xβ = 0", 1e-10),
    kind("f1_hodgy_podgy_1", "ψ∧u∧⋆β = -α∧dα∧u∧π*β", 1e-10),
    kind("f2_hodgy_podgy_2", "dα∧u∧⋆β = α∧ψ∧u∧π*β", 1e-10),
    kind("h_alpha_omega_omega", "α∧ω-∧ω+ = -(1/8) dvol_α", 1e-10),
    kind("rotation_square", "I² = -Id on ker α", 1e-10),
    kind("psi_coframe_vs_hv", "ψ from the coframe equals its H/V formula", 1e-10),
    kind("omega_plus_coframe_vs_hv", "ω+ from the coframe equals its H/V formula", 1e-10),
    kind("omega_minus_coframe_vs_hv", "ω- from the coframe equals its H/V formula", 1e-10),
    kind("pushforward_psi", "π(ψ) = -4π, relative", 1e-8),
    kind("pushforward_dvol", "π(dvol_α) = -8π dvol_g, relative", 1e-8),
    kind("pushforward_alpha_dalpha", "π(α∧dα) = 0", 1e-8),
    kind("pushforward_alpha_psi", "π(α∧ψ) = 0", 1e-8),
    kind("matrix_subspace_search", "invertible element found iff one exists", 0.0),
];

const BOUNDARY_KINDS: &[CheckKind] = &[
    kind("phi_product", "Φ-Φ+|B- - B+|² = 4", 1e-10),
    kind("xi_round_trip", "Ξ⁻¹(Ξ(x,v)) = (x,v)", 1e-10),
    kind("xi_jacobian", "|det dΞ| = 4(Φ-Φ+)⁻², relative", 1e-4),
    kind("b_equivariance", "B±(γ(x,v)) = L_γ B±(x,v)", 1e-10),
];

const QS_KINDS: &[CheckKind] = &[
    kind("laplace_s", "-Δ⟨x,y⟩^-s = s(s+1)⟨x,y⟩^(-s-2) + s(2-s)⟨x,y⟩^-s, relative", 1e-10),
    kind("laplace_s_fd", "the same by finite differences, relative", 1e-6),
    kind("intertwining_s3", "(-Δ - s(2-s))Q_s = s(s+1)Q_(s+2) at s = 3, relative", 1e-5),
    kind("intertwining_s4", "(-Δ - s(2-s))Q_s = s(s+1)Q_(s+2) at s = 4, relative", 1e-5),
    kind("q4_one", "Q_4 1(e0) = 4π/3, relative", 1e-6),
];

const SPHERE_KINDS: &[CheckKind] = &[
    kind("schur_bound", "|λ_ℓ| ≤ π‖κ‖_L¹, relative excess", 1e-12),
    kind("kappa_tilde", "λ_ℓ(κ̃) + ℓ(ℓ+1)λ_ℓ(κ) = 0, relative", 1e-8),
    kind("norm_decreasing", "‖A_κε‖ strictly decreasing as ε decreases, violations", 0.0),
    kind("norm_slope", "log-log slope of ‖A_κε‖_(H^-5/2→H^5/2) minus 1", 0.3),
    kind("kappa_l1_slope", "log-log slope of ‖κ_ε‖_L¹ minus 4", 0.3),
];

const MAIN_KINDS: &[CheckKind] = &[
    kind("rhs_constant", "rhs = 4π²/9 for g± ≡ 1, relative", 1e-6),
    kind("identity", "|lhs_boundary(ε_min) - rhs| / S", 1e-3),
    kind("bulk", "|lhs_bulk - lhs_boundary| / S", 1e-3),
    kind("rhs_fd", "|rhs - rhs_fd| / S with rhs_fd = -(1/6)Δ(σ-·σ+)(e0)", 1e-3),
    kind("monotone", "|lhs_boundary - rhs| non-increasing as ε decreases, violations", 0.0),
    kind("transport", "(X∓2)f± = 0, stable/unstable derivatives of f± vanish", 1e-4),
    kind("transport_constant", "transport residual for g± ≡ 1", 1e-6),
];

const ZETA_KINDS: &[CheckKind] = &[
    kind("graded_vs_product", "Σ_k (-1)^k log ζ_k = log Π(1 - e^(iλT))", 1e-10),
    kind("ruelle_order_hyperbolic", "order 4 - 2b1 for b1 = 0..5", 0.0),
    kind("ruelle_order_perturbed", "order 4 - b1 for b1 = 0..5", 0.0),
    kind("betti_duality", "b_k = b_(5-k)", 0.0),
];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("no check matches tolerance key {0:?}")]
    UnknownTolerance(String),
    #[error("tolerance for {0:?} must be positive and finite, got {1}")]
    InvalidTolerance(String, f64),
    #[error("{0}")]
    BelowMinimum(String),
    #[error("{0}")]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Zeta(#[from] ZetaError),
    #[error("{0}")]
    Qs(#[from] QsError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub paper_ref: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub suite: Suite,
    pub seed: u64,
    pub per_check: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<serde_json::Value>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.per_check.iter().all(|c| c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.per_check.iter().find(|c| c.id == id)
    }
}

/// A labelled density pair for the main-identity suite.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledPair {
    pub label: String,
    pub pair: BoundaryDensityPair,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Overrides keyed by a full check id or by a check kind.
    pub tolerances: BTreeMap<String, f64>,
    /// Fiber grid of the pushforward checks; the polar count also sets the
    /// direction order of the `Q_s` quadrature.
    pub sphere_grid: Option<(usize, usize)>,
    /// Gauss–Legendre nodes per radial panel in the `Q_s` quadrature.
    pub radial_nodes: Option<usize>,
    pub eps: Option<Vec<f64>>,
    /// Replaces the default density pairs of the main-identity suite.
    pub pairs: Option<Vec<LabelledPair>>,
    /// Extra closed-geodesic data for the zeta suite.
    pub records: Option<Vec<ClosedGeodesicRecord>>,
    /// Scales every random sample count (1 = the default counts).
    pub sample_scale: Option<f64>,
}

/// `ε = 2⁻¹, 2⁻², 2⁻³, 2⁻⁶`.
pub fn default_eps_list() -> Vec<f64> {
    vec![0.5, 0.25, 0.125, 2f64.powi(-6)]
}

const MIN_RADIAL_NODES: usize = 16;

impl VerifyOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn samples(&self, n: usize) -> usize {
        ((n as f64 * self.sample_scale.unwrap_or(1.0)).round() as usize).max(1)
    }

    fn fiber_grid(&self) -> SphereGrid {
        let (a, b) = self.sphere_grid.unwrap_or(DEFAULT_FIBER_GRID);
        SphereGrid::new(a, b)
    }

    fn qs_config(&self, s: f64) -> Result<QsConfig, QsError> {
        let mut c = QsConfig::new(s)?;
        if let Some(k) = self.radial_nodes {
            c.radial_nodes = k;
        }
        if let Some((n, _)) = self.sphere_grid {
            c.sphere_order = n;
        }
        c.validate()?;
        Ok(c)
    }

    fn labels(&self, suite: Suite) -> Vec<String> {
        match (suite, &self.pairs) {
            (Suite::MainIdentity, Some(p)) => p.iter().map(|l| l.label.clone()).collect(),
            (Suite::MainIdentity, None) => DEFAULT_PAIR_LABELS.iter().map(|s| s.to_string()).collect(),
            (Suite::Zeta, _) if self.records.is_some() => vec!["records".into()],
            _ => vec![],
        }
    }

    /// Rejects unknown tolerance keys, nonpositive tolerances and grids
    /// coarser than the module defaults.
    pub fn validate(&self, suite: Suite) -> Result<(), VerifyError> {
        let mut known: BTreeSet<String> = suite.kinds().iter().map(|k| k.id.to_string()).collect();
        for l in self.labels(suite) {
            for k in suite.kinds() {
                known.insert(format!("{l}.{}", k.id));
            }
        }
        for (key, &t) in &self.tolerances {
            if !known.contains(key) {
                return Err(VerifyError::UnknownTolerance(key.clone()));
            }
            if !(t > 0.0 && t.is_finite()) {
                return Err(VerifyError::InvalidTolerance(key.clone(), t));
            }
        }
        if let Some((a, b)) = self.sphere_grid {
            let (da, db) = DEFAULT_FIBER_GRID;
            if a < da || b < db {
                return Err(VerifyError::BelowMinimum(format!("sphere grid {a}x{b} is below the minimum {da}x{db}")));
            }
        }
        if let Some(k) = self.radial_nodes {
            if k < MIN_RADIAL_NODES {
                return Err(VerifyError::BelowMinimum(format!(
                    "radial order {k} is below the minimum {MIN_RADIAL_NODES}"
                )));
            }
        }
        if let Some(e) = &self.eps {
            if e.is_empty() {
                return Err(VerifyError::Pipeline(PipelineError::InvalidGrid("empty ε list".into())));
            }
            if let Some(&bad) = e.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(VerifyError::Pipeline(PipelineError::InvalidEps(bad)));
            }
        }
        if let Some(s) = self.sample_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(VerifyError::BelowMinimum(format!("sample scale must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Collects checks, applying tolerance overrides.
struct Recorder<'a> {
    suite: Suite,
    tolerances: &'a BTreeMap<String, f64>,
    checks: Vec<Check>,
}

impl<'a> Recorder<'a> {
    fn new(suite: Suite, opts: &'a VerifyOptions) -> Self {
        Self { suite, tolerances: &opts.tolerances, checks: Vec::new() }
    }

    fn push(&mut self, label: Option<&str>, kind_id: &str, residual: f64) {
        let k = self.suite.kinds().iter().find(|k| k.id == kind_id).expect("registered kind");
        let id = match label {
            Some(l) => format!("{l}.{kind_id}"),
            None => kind_id.to_string(),
        };
        let tolerance = self
            .tolerances
            .get(&id)
            .or_else(|| self.tolerances.get(kind_id))
            .copied()
            .unwrap_or(k.tolerance);
        let pass = residual.is_finite() && residual <= tolerance;
        self.checks.push(Check { id, paper_ref: k.paper_ref.to_string(), residual, tolerance, pass });
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerificationReport, VerifyError> {
    opts.validate(suite)?;
    let mut rec = Recorder::new(suite, opts);
    let detail = match suite {
        Suite::Identities => identities(opts, &mut rec).map(|_| None)?,
        Suite::Boundary => boundary(opts, &mut rec).map(|_| None)?,
        Suite::Qs => qs(opts, &mut rec).map(|_| None)?,
        Suite::SphereConv => sphere(opts, &mut rec).map(Some)?,
        Suite::MainIdentity => main_identity(opts, &mut rec).map(Some)?,
        Suite::Zeta => zeta(opts, &mut rec).map(|_| None)?,
    };
    Ok(VerificationReport { schema: SCHEMA_VERSION, suite, seed: opts.seed, per_check: rec.checks, detail })
}

// ---------------------------------------------------------------- identities

fn rat_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// The bracket relations as a lookup `(a, b) → Σ c_k Y_k`.
pub fn expected_bracket(a: FieldTag, b: FieldTag) -> [i64; 6] {
    use FieldTag::*;
    let mut out = [0i64; 6];
    let one = |out: &mut [i64; 6], k: FieldTag, c: i64| out[k.index()] += c;
    let plus = |t: FieldTag| matches!(t, U1Plus | U2Plus);
    let first = |t: FieldTag| matches!(t, U1Plus | U1Minus);
    let is_u = |t: FieldTag| !matches!(t, X | R);
    let rotate = |t: FieldTag| -> (FieldTag, i64) {
        // [R, U_1±] = −U_2±, [R, U_2±] = U_1±
        match t {
            U1Plus => (U2Plus, -1),
            U1Minus => (U2Minus, -1),
            U2Plus => (U1Plus, 1),
            U2Minus => (U1Minus, 1),
            _ => unreachable!(),
        }
    };
    match (a, b) {
        (X, t) if is_u(t) => one(&mut out, t, if plus(t) { 1 } else { -1 }),
        (t, X) if is_u(t) => one(&mut out, t, if plus(t) { -1 } else { 1 }),
        (R, t) if is_u(t) => {
            let (k, c) = rotate(t);
            one(&mut out, k, c)
        }
        (t, R) if is_u(t) => {
            let (k, c) = rotate(t);
            one(&mut out, k, -c)
        }
        (s, t) if is_u(s) && is_u(t) && plus(s) != plus(t) => {
            let sign = if plus(s) { 1 } else { -1 };
            if first(s) == first(t) {
                one(&mut out, X, 2 * sign);
            } else {
                // [U_1±, U_2∓] = 2R, and the reversed order [U_2∓, U_1±] = −2R
                one(&mut out, R, if first(s) { 2 } else { -2 });
            }
        }
        _ => {}
    }
    out
}

pub fn structure_constant_defect() -> f64 {
    let t = match commutator_table() {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    let mut worst: f64 = 0.0;
    for a in FieldTag::ALL {
        for b in FieldTag::ALL {
            let want = expected_bracket(a, b);
            for (got, w) in t.get(a, b).iter().zip(want) {
                worst = worst.max(rat_f64(&(got - Rational::from_integer(w))).abs());
            }
        }
    }
    worst
}

/// `max |dθ(Y_a, Y_b) + θ([Y_a, Y_b])|` over the given coframe symbols.
pub fn maurer_cartan_defect(symbols: &[Coframe]) -> f64 {
    let t = match commutator_table() {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    let mut worst: f64 = 0.0;
    for &s in symbols {
        let d = CoframePolynomial::symbol(s).d();
        for a in FieldTag::ALL {
            for b in FieldTag::ALL {
                if a == b {
                    continue;
                }
                let lhs = d.coeff(&[a.dual_symbol(), b.dual_symbol()]);
                let c = t.constant(s.dual_field(), a, b);
                let rhs = -num_rational::BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()));
                worst = worst.max((lhs - rhs).to_f64().unwrap_or(f64::INFINITY).abs());
            }
        }
    }
    worst
}

pub fn exact_identity_defects() -> [(&'static str, f64); 6] {
    let a = forms::alpha();
    let da = forms::d_alpha();
    let psi = forms::psi();
    let (op, om) = (forms::omega_plus(), forms::omega_minus());
    [
        ("d_psi", psi.d().max_abs_f64()),
        ("psi_wedge_psi", psi.wedge(&psi).sub(&da.wedge(&da)).max_abs_f64()),
        ("dalpha_wedge_psi", da.wedge(&psi).max_abs_f64()),
        ("d_omega_plus", op.d().sub(&a.wedge(&op).scale_int(2)).max_abs_f64()),
        ("d_omega_minus", om.d().add(&a.wedge(&om).scale_int(2)).max_abs_f64()),
        ("lie_x_psi", psi.lie_x().max_abs_f64()),
    ]
}

fn identities(opts: &VerifyOptions, rec: &mut Recorder) -> Result<(), VerifyError> {
    rec.push(None, "structure_constants", structure_constant_defect());
    rec.push(None, "d_alpha", maurer_cartan_defect(&[Coframe::Alpha]));
    rec.push(None, "d_r_star", maurer_cartan_defect(&[Coframe::RStar]));
    rec.push(
        None,
        "d_u_star",
        maurer_cartan_defect(&[Coframe::U1PlusStar, Coframe::U2PlusStar, Coframe::U1MinusStar, Coframe::U2MinusStar]),
    );
    for (id, r) in exact_identity_defects() {
        rec.push(None, id, r);
    }
    let suite = identity_suite(None, opts.samples(1000), opts.seed);
    for id in NUMERIC_IDS {
        let r = suite.get(id).map_or(f64::INFINITY, |e| e.max_residual);
        rec.push(None, id, r);
    }
    let p = pushforward_constants(opts)?;
    rec.push(None, "pushforward_psi", p[0]);
    rec.push(None, "pushforward_dvol", p[1]);
    rec.push(None, "pushforward_alpha_dalpha", p[2]);
    rec.push(None, "pushforward_alpha_psi", p[3]);
    let m = matrix_subspace_agreement(opts.seed, opts.samples(1000));
    rec.push(None, "matrix_subspace_search", m.disagreements as f64);
    Ok(())
}

/// Residuals of the four pushforward constants over a few random points.
pub fn pushforward_constants(opts: &VerifyOptions) -> Result<[f64; 4], PipelineError> {
    let grid = opts.fiber_grid();
    let mut rng = stream_rng(opts.seed, 101);
    let a_da = Wedge::new(vec![Box::new(ContactForm::Alpha), Box::new(ContactForm::DAlpha)]);
    let a_psi = Wedge::new(vec![Box::new(ContactForm::Alpha), Box::new(ContactForm::Psi)]);
    let vol = dvol_alpha();
    let mut out = [0.0f64; 4];
    for _ in 0..opts.samples(4) {
        let x = random_point(&mut rng, 1.5);
        let psi = fiber_pushforward(&ContactForm::Psi, &x, &[], &grid)?;
        out[0] = out[0].max((psi + 4.0 * PI).abs() / (4.0 * PI));
        let w: Vec<_> = (0..3).map(|_| random_tangent_at(&mut rng, &x)).collect();
        let want = -8.0 * PI * orientation(x.coords(), &w[0], &w[1], &w[2]);
        let got = fiber_pushforward(&vol, &x, &w, &grid)?;
        out[1] = out[1].max((got - want).abs() / want.abs().max(8.0 * PI * 1e-3));
        out[2] = out[2].max(fiber_pushforward(&a_da as &dyn FormField, &x, &w[..1], &grid)?.abs());
        out[3] = out[3].max(fiber_pushforward(&a_psi as &dyn FormField, &x, &w[..1], &grid)?.abs());
    }
    Ok(out)
}

// ------------------------------------------------------- matrix subspaces

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceAgreement {
    pub instances: usize,
    pub with_invertible: usize,
    pub disagreements: usize,
}

/// Integer basis of a random subspace family, with its symmetry flag.
pub fn random_integer_subspace<R: Rng + ?Sized>(rng: &mut R) -> (usize, Vec<Vec<i64>>, bool) {
    let n = rng.random_range(1..=4usize);
    let k = rng.random_range(1..=4usize);
    let family = rng.random_range(0..7u8);
    let entry = |rng: &mut R| rng.random_range(-2..=2i64);
    let mut basis = Vec::with_capacity(k);
    let zero_col = rng.random_range(0..n);
    let block_rows: usize = rng.random_range(1..=n);
    let rows: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        idx.truncate(block_rows);
        idx
    };
    let cols: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        idx.truncate(n + 1 - block_rows);
        idx
    };
    for _ in 0..k {
        let mut m = vec![0i64; n * n];
        match family {
            0 => m.iter_mut().for_each(|e| *e = entry(rng)),
            1 => {
                m.iter_mut().for_each(|e| *e = entry(rng));
                (0..n).for_each(|r| m[r * n + zero_col] = 0);
            }
            2 => {
                m.iter_mut().for_each(|e| *e = entry(rng));
                for &r in &rows {
                    for &c in &cols {
                        m[r * n + c] = 0;
                    }
                }
            }
            3 => {
                let u: Vec<i64> = (0..n).map(|_| entry(rng)).collect();
                let v: Vec<i64> = (0..n).map(|_| entry(rng)).collect();
                for r in 0..n {
                    for c in 0..n {
                        m[r * n + c] = u[r] * v[c];
                    }
                }
            }
            4 | 5 => {
                for r in 0..n {
                    for c in r..n {
                        let e = entry(rng);
                        m[r * n + c] = e;
                        m[c * n + r] = e;
                    }
                }
                if family == 5 {
                    for i in 0..n {
                        m[i * n + zero_col] = 0;
                        m[zero_col * n + i] = 0;
                    }
                }
            }
            _ => {
                for r in 0..n {
                    for c in r + 1..n {
                        let e = entry(rng);
                        m[r * n + c] = e;
                        m[c * n + r] = -e;
                    }
                }
            }
        }
        basis.push(m);
    }
    (n, basis, family == 4 || family == 5)
}

fn det_int(m: &[i64], n: usize) -> i128 {
    if n == 1 {
        return m[0] as i128;
    }
    let mut total = 0i128;
    for c in 0..n {
        if m[c] == 0 {
            continue;
        }
        let minor: Vec<i64> = (1..n).flat_map(|r| (0..n).filter(move |&cc| cc != c).map(move |cc| m[r * n + cc])).collect();
        let sign = if c % 2 == 0 { 1 } else { -1 };
        total += sign * m[c] as i128 * det_int(&minor, n - 1);
    }
    total
}

/// Exact existence test: `det(Σ c_i B_i)` has degree at most `n` in each
/// `c_i`, so it vanishes identically iff it vanishes on `{0..n}^k`.
pub fn brute_force_invertible_exists(n: usize, basis: &[Vec<i64>]) -> bool {
    let k = basis.len();
    let mut c = vec![0i64; k];
    loop {
        let m: Vec<i64> = (0..n * n).map(|e| basis.iter().zip(&c).map(|(b, ci)| b[e] * ci).sum()).collect();
        if det_int(&m, n) != 0 {
            return true;
        }
        let mut i = 0;
        loop {
            if i == k {
                return false;
            }
            c[i] += 1;
            if c[i] <= n as i64 {
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

fn in_span(v: &MatrixSubspace, a: &DMatrix<f64>) -> bool {
    let n = v.n();
    let k = v.basis().len();
    let stacked = DMatrix::from_fn(n * n, k + 1, |r, c| if c < k { v.basis()[c][(r / n, r % n)] } else { a[(r / n, r % n)] });
    numerical_rank(&stacked) == k
}

/// Compare the rank-augmentation search with exact existence on seeded
/// random instances.
pub fn matrix_subspace_agreement(seed: u64, instances: usize) -> SubspaceAgreement {
    let mut rng = stream_rng(seed, 202);
    let mut out = SubspaceAgreement { instances: 0, with_invertible: 0, disagreements: 0 };
    while out.instances < instances {
        let (n, ints, symmetric) = random_integer_subspace(&mut rng);
        let basis: Vec<DMatrix<f64>> =
            ints.iter().map(|m| DMatrix::from_row_iterator(n, n, m.iter().map(|&x| x as f64))).collect();
        let Ok(v) = MatrixSubspace::new(n, basis, symmetric) else {
            continue;
        };
        out.instances += 1;
        let exists = brute_force_invertible_exists(n, &ints);
        out.with_invertible += exists as usize;
        let found = match find_invertible_in_subspace(&v, 4 * n) {
            Ok(a) => in_span(&v, &a) && numerical_rank(&a) == n,
            Err(_) => false,
        };
        if found != exists {
            out.disagreements += 1;
        }
    }
    out
}

// ---------------------------------------------------------------- boundary

fn boundary(opts: &VerifyOptions, rec: &mut Recorder) -> Result<(), VerifyError> {
    let mut rng = stream_rng(opts.seed, 301);
    let (mut prod, mut trip): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.samples(10_000) {
        let p = random_unit_tangent(&mut rng, 3.0);
        let m = boundary_maps(&p);
        let d = sub3(&m.b_minus.nu, &m.b_plus.nu);
        prod = prod.max((m.phi_minus * m.phi_plus * dot3(&d, &d) - 4.0).abs());
        let q = xi_inverse(&xi_forward(&p)).map_err(|e| VerifyError::BelowMinimum(e.to_string()))?;
        let scale = p.x.0[0];
        trip = trip.max((q.x - p.x).max_abs().max((q.v - p.v).max_abs()) / scale);
    }
    rec.push(None, "phi_product", prod);
    rec.push(None, "xi_round_trip", trip);
    let mut jac: f64 = 0.0;
    for _ in 0..opts.samples(100) {
        let p = random_unit_tangent(&mut rng, 2.0);
        let a = xi_jacobian(&p);
        jac = jac.max((xi_jacobian_fd(&p, 1e-4) - a).abs() / a);
    }
    rec.push(None, "xi_jacobian", jac);
    let mut eq: f64 = 0.0;
    for _ in 0..opts.samples(100) {
        let g = random_lorentz(&mut rng, 1.0);
        let p = random_unit_tangent(&mut rng, 2.0);
        for s in [Sign::Plus, Sign::Minus] {
            match mobius_action(&g, &b_pm(&p, s)) {
                Ok((l, _)) => {
                    let q = b_pm(&p.transform(&g), s);
                    let d = sub3(&l.nu, &q.nu);
                    eq = eq.max(dot3(&d, &d).sqrt());
                }
                Err(_) => eq = f64::INFINITY,
            }
        }
    }
    rec.push(None, "b_equivariance", eq);
    Ok(())
}

// ---------------------------------------------------------------------- qs

fn power_laplacian_closed(s: f64, rho: f64) -> (f64, f64) {
    let a = s * (s + 1.0) * rho.powf(-s - 2.0);
    let b = s * (2.0 - s) * rho.powf(-s);
    (a + b, a.abs() + b.abs())
}

/// The three radial test functions used for the intertwining relation.
pub fn intertwining_test_functions() -> Vec<RadialTestFunction> {
    vec![
        RadialTestFunction::new("gaussian_origin", GaussianDistanceProfile, H3Point::origin()),
        RadialTestFunction::new("gaussian_shifted", GaussianDistanceProfile, H3Point::from_polar(0.8, [0.6, 0.0, 0.8])),
        RadialTestFunction::new("power6_shifted", PowerProfile::new(6.0), H3Point::from_polar(0.5, [0.0, 1.0, 0.0])),
    ]
}

fn qs(opts: &VerifyOptions, rec: &mut Recorder) -> Result<(), VerifyError> {
    let mut sym: f64 = 0.0;
    for s in [2.5, 3.0, 4.0, 5.0, 6.0] {
        let t = radial_laplacian(PowerProfile::new(s));
        for i in 0..200 {
            let rho = 1.0 + 49.0 * (i as f64 / 199.0).powi(2);
            let (want, scale) = power_laplacian_closed(s, rho);
            sym = sym.max((t.eval(rho) - want).abs() / scale);
        }
    }
    rec.push(None, "laplace_s", sym);
    let mut rng = stream_rng(opts.seed, 401);
    let mut fd: f64 = 0.0;
    for _ in 0..opts.samples(20) {
        let s = [3.0, 4.0][rng.random_range(0..2)];
        let y = random_point(&mut rng, 1.0);
        let x = random_point(&mut rng, 1.0);
        let f = |z: &H3Point| crate::exterior_core::mink_inner(z.coords(), y.coords()).powf(-s);
        let rho = crate::exterior_core::mink_inner(x.coords(), y.coords());
        let (want, scale) = power_laplacian_closed(s, rho);
        fd = fd.max((-laplacian_fd(&f, &x, 1e-2) - want).abs() / scale);
    }
    rec.push(None, "laplace_s_fd", fd);
    for (s, id) in [(3.0, "intertwining_s3"), (4.0, "intertwining_s4")] {
        let cfg = opts.qs_config(s)?;
        let mut worst: f64 = 0.0;
        for f in intertwining_test_functions() {
            worst = worst.max(intertwining_residual(&cfg, &f)?.relative);
        }
        rec.push(None, id, worst);
    }
    let v = q_s_apply_at_origin(&opts.qs_config(4.0)?, &|_| 1.0)?;
    rec.push(None, "q4_one", (v.value - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0));
    Ok(())
}

// -------------------------------------------------------------- sphereconv

/// `ε = 2⁻¹ … 2⁻⁶`.
pub fn decay_eps_list() -> Vec<f64> {
    (1..=6).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereDetail {
    pub decay: DecayTable,
    pub kappa_l1: Vec<f64>,
    pub kappa_l1_slope: f64,
}

fn sphere(opts: &VerifyOptions, rec: &mut Recorder) -> Result<serde_json::Value, VerifyError> {
    let mut rng = stream_rng(opts.seed, 501);
    let (mut schur, mut tilde): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.samples(50) {
        let k = SampleKernel::random(&mut rng);
        let spec = funk_hecke_spectrum(&k, 64);
        let bound = schur_bound(&k);
        schur = schur.max(spec.schur_defect(bound).max(0.0) / bound);
        let t = funk_hecke_spectrum(&kappa_tilde(k.clone()), 64);
        let scale = spec.lambdas.iter().enumerate().map(|(l, x)| (l * (l + 1)).max(1) as f64 * x.abs()).fold(0.0, f64::max);
        let worst = t
            .lambdas
            .iter()
            .zip(&spec.lambdas)
            .enumerate()
            .map(|(l, (a, b))| (a + (l * (l + 1)) as f64 * b).abs())
            .fold(0.0, f64::max);
        tilde = tilde.max(worst / scale.max(f64::MIN_POSITIVE));
    }
    rec.push(None, "schur_bound", schur);
    rec.push(None, "kappa_tilde", tilde);
    let eps = opts.eps.clone().unwrap_or_else(decay_eps_list);
    let decay = regularization_norm_decay(&eps, BandCap::default());
    let mut rows: Vec<_> = decay.rows.iter().collect();
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let violations = rows.windows(2).filter(|w| w[1].norm >= w[0].norm).count();
    rec.push(None, "norm_decreasing", violations as f64);
    rec.push(None, "norm_slope", (decay.slope - 1.0).abs());
    let kappa_l1: Vec<f64> = eps.iter().map(|&e| kappa_eps(e).l1_profile(0, 0)).collect();
    let kappa_l1_slope = log_log_slope(&eps, &kappa_l1);
    rec.push(None, "kappa_l1_slope", (kappa_l1_slope - 4.0).abs());
    Ok(serde_json::to_value(SphereDetail { decay, kappa_l1, kappa_l1_slope }).expect("serializable"))
}

// ----------------------------------------------------------- main identity

pub const DEFAULT_PAIR_LABELS: [&str; 4] = ["constant", "random_l4", "random_l8", "y10_y20"];

/// `g± ≡ 1`, a random degree-4 pair, a random degree-8 pair and `(Y₁₀, Y₂₀)`.
pub fn default_pairs(seed: u64) -> Vec<LabelledPair> {
    let mut rng = stream_rng(seed, 601);
    let l4 = BoundaryDensityPair::random(&mut rng, 4, 0.5);
    let l8 = BoundaryDensityPair::random(&mut rng, 8, 0.5);
    let pairs = [BoundaryDensityPair::constant(1.0, 1.0), l4, l8, BoundaryDensityPair::y10_y20()];
    DEFAULT_PAIR_LABELS
        .iter()
        .zip(pairs)
        .map(|(l, pair)| LabelledPair { label: l.to_string(), pair })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDetail {
    pub label: String,
    pub report: MainIdentityReport,
    pub transport: TransportResiduals,
}

/// Main-identity report and transport residuals for one pair.
pub fn run_pair(pair: &BoundaryDensityPair, eps: &[f64], seed: u64) -> Result<(MainIdentityReport, TransportResiduals), PipelineError> {
    let grids = MainIdentityGrids::for_band(pair.l_max);
    let report = main_identity_check(pair, eps, &grids)?;
    let transport = transport_residual(pair, 100, seed)?;
    Ok((report, transport))
}

fn is_constant_pair(p: &BoundaryDensityPair) -> bool {
    p.l_max == 0
}

fn is_unit_pair(p: &BoundaryDensityPair) -> bool {
    let n = [0.0, 0.0, 1.0];
    (p.g_minus.eval_real(&n) - 1.0).abs() < 1e-14 && (p.g_plus.eval_real(&n) - 1.0).abs() < 1e-14
}

fn main_identity(opts: &VerifyOptions, rec: &mut Recorder) -> Result<serde_json::Value, VerifyError> {
    let pairs = opts.pairs.clone().unwrap_or_else(|| default_pairs(opts.seed));
    let eps = opts.eps.clone().unwrap_or_else(default_eps_list);
    let mut details = Vec::new();
    for lp in &pairs {
        let (report, transport) = run_pair(&lp.pair, &eps, opts.seed)?;
        let label = Some(lp.label.as_str());
        let constant = is_constant_pair(&lp.pair);
        if constant && is_unit_pair(&lp.pair) {
            rec.push(label, "rhs_constant", (report.rhs - 4.0 * PI * PI / 9.0).abs() / (4.0 * PI * PI / 9.0));
        }
        rec.push(label, "identity", report.identity_residual);
        if let Some(b) = report.max_bulk_residual {
            rec.push(label, "bulk", b);
        }
        rec.push(label, "rhs_fd", report.fd_residual);
        let violations = report
            .rows
            .windows(2)
            .filter(|w| (w[1].lhs_boundary - report.rhs).abs() > (w[0].lhs_boundary - report.rhs).abs() + 1e-14 * report.scale)
            .count();
        rec.push(label, "monotone", violations as f64);
        rec.push(label, if constant { "transport_constant" } else { "transport" }, transport.max());
        details.push(PairDetail { label: lp.label.clone(), report, transport });
    }
    Ok(serde_json::to_value(details).expect("serializable"))
}

// -------------------------------------------------------------------- zeta

/// Max `|graded − product|` over seeded synthetic spectra at
/// `λ ∈ {0, 1.3} + 3i·rate`.
pub fn zeta_agreement(seed: u64, spectra: usize) -> Result<f64, ZetaError> {
    let mut rng = stream_rng(seed, 701);
    let mut worst: f64 = 0.0;
    for _ in 0..spectra {
        let recs = synthetic_spectrum(&mut rng, 50, 20);
        worst = worst.max(records_agreement(&recs)?);
    }
    Ok(worst)
}

fn records_agreement(recs: &[ClosedGeodesicRecord]) -> Result<f64, ZetaError> {
    let rate = max_expansion_rate(recs);
    let mut worst: f64 = 0.0;
    for re in [0.0, 1.3] {
        let lam = Complex64::new(re, 3.0 * rate.max(1.0));
        let a = log_ruelle_graded(recs, lam)?;
        let b = log_ruelle_product(recs, lam);
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

fn zeta(opts: &VerifyOptions, rec: &mut Recorder) -> Result<(), VerifyError> {
    rec.push(None, "graded_vs_product", zeta_agreement(opts.seed, opts.samples(5))?);
    let (mut hyp, mut per, mut dual) = (0i64, 0i64, 0i64);
    for b1 in 0..=5u64 {
        let b = b1 as i64;
        hyp = hyp.max((ruelle_order(&MultiplicityTable::for_case(MultiplicityCase::Hyperbolic, b1)) - (4 - 2 * b)).abs());
        per = per.max((ruelle_order(&MultiplicityTable::for_case(MultiplicityCase::Perturbed, b1)) - (4 - b)).abs());
        let t = betti_table(b1);
        dual = dual.max((0..6).map(|k| (t[k] as i64 - t[5 - k] as i64).abs()).max().unwrap_or(0));
    }
    rec.push(None, "ruelle_order_hyperbolic", hyp as f64);
    rec.push(None, "ruelle_order_perturbed", per as f64);
    rec.push(None, "betti_duality", dual as f64);
    if let Some(r) = &opts.records {
        rec.push(Some("records"), "graded_vs_product", records_agreement(r)?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn expected_brackets_are_antisymmetric() {
        for a in FieldTag::ALL {
            for b in FieldTag::ALL {
                let (x, y) = (expected_bracket(a, b), expected_bracket(b, a));
                assert!(x.iter().zip(&y).all(|(p, q)| p + q == 0), "{a} {b}");
            }
        }
    }

    #[test]
    fn integer_determinants() {
        assert_eq!(det_int(&[2, 1, 1, 3], 2), 5);
        assert_eq!(det_int(&[0, 1, 0, 0, 0, 1, 1, 0, 0], 3), 1);
        assert!(!brute_force_invertible_exists(2, &[vec![1, 0, 0, 0], vec![0, 0, 1, 0]]));
        assert!(brute_force_invertible_exists(2, &[vec![1, 0, 0, 0], vec![0, 0, 0, 1]]));
    }

    #[test]
    fn tolerance_validation() {
        let mut o = VerifyOptions::new(1);
        o.tolerances.insert("phi_product".into(), 1e-9);
        assert!(o.validate(Suite::Boundary).is_ok());
        assert!(matches!(o.validate(Suite::Zeta), Err(VerifyError::UnknownTolerance(_))));
        o.tolerances.insert("phi_product".into(), 0.0);
        assert!(matches!(o.validate(Suite::Boundary), Err(VerifyError::InvalidTolerance(..))));
        let mut m = VerifyOptions::new(1);
        m.tolerances.insert("random_l8.identity".into(), 1e-2);
        assert!(m.validate(Suite::MainIdentity).is_ok());
        m.sphere_grid = Some((8, 8));
        assert!(matches!(m.validate(Suite::MainIdentity), Err(VerifyError::BelowMinimum(_))));
    }
}
