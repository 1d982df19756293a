//! Left-invariant fields on the frame bundle F H³ ≅ SO₊(1,3), the canonical
//! coframe and an exact exterior calculus driven by the structure equations.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Matrix4;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior_core::{mink_inner, AlternatingForm, MinkowskiVector};
use crate::hyperboloid::{g_inner, tangent_frame, GeometryError, SphereTangent, UnitTangent};

pub const FRAME_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("not a positively oriented orthonormal frame (defect {defect:e})")]
    NotAFrame { defect: f64 },
    #[error("commutator [{0}, {1}] is not in the span of the six fields")]
    OutsideSpan(FieldTag, FieldTag),
    #[error("form does not descend to SH³: {0}")]
    DescentFailure(&'static str),
    #[error("base point of the tangent basis does not match the frame")]
    BaseMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A point `(x, v₁, v₂, v₃)` of the frame bundle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameQuadruple {
    pub x: MinkowskiVector,
    pub v1: MinkowskiVector,
    pub v2: MinkowskiVector,
    pub v3: MinkowskiVector,
}

impl FrameQuadruple {
    pub fn new(
        x: MinkowskiVector,
        v1: MinkowskiVector,
        v2: MinkowskiVector,
        v3: MinkowskiVector,
    ) -> Result<Self, FrameError> {
        let f = Self { x, v1, v2, v3 };
        let m = f.matrix();
        let j = crate::exterior_core::minkowski_gram();
        let scale = m.amax().max(1.0).powi(2);
        let defect = (m.transpose() * j * m - j).amax() / scale;
        let det = m.determinant();
        if defect > FRAME_TOL || (det - 1.0).abs() > FRAME_TOL * scale || x.0[0] <= 0.0 {
            return Err(FrameError::NotAFrame { defect: defect.max((det - 1.0).abs()) });
        }
        Ok(f)
    }

    pub fn standard() -> Self {
        Self::from_matrix(&Matrix4::identity())
    }

    /// The frame `(γe₀, γe₁, γe₂, γe₃)`.
    pub fn from_matrix(gamma: &Matrix4<f64>) -> Self {
        let col = |i: usize| MinkowskiVector::from_vector4(&gamma.column(i).into_owned());
        Self { x: col(0), v1: col(1), v2: col(2), v3: col(3) }
    }

    /// Complete a unit tangent to a frame with the deterministic tangent frame.
    pub fn from_unit_tangent(p: &UnitTangent) -> Self {
        let (v2, v3) = tangent_frame(p);
        Self { x: p.x, v1: p.v, v2, v3 }
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_columns(&[
            self.x.to_vector4(),
            self.v1.to_vector4(),
            self.v2.to_vector4(),
            self.v3.to_vector4(),
        ])
    }

    pub fn columns(&self) -> [MinkowskiVector; 4] {
        [self.x, self.v1, self.v2, self.v3]
    }

    pub fn unit_tangent(&self) -> UnitTangent {
        UnitTangent { x: self.x, v: self.v1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldTag {
    X,
    R,
    U1Plus,
    U2Plus,
    U1Minus,
    U2Minus,
}

impl FieldTag {
    pub const ALL: [FieldTag; 6] =
        [FieldTag::X, FieldTag::R, FieldTag::U1Plus, FieldTag::U2Plus, FieldTag::U1Minus, FieldTag::U2Minus];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The canonical 1-form pairing to 1 with this field.
    pub fn dual_symbol(self) -> Coframe {
        match self {
            FieldTag::X => Coframe::Alpha,
            FieldTag::R => Coframe::RStar,
            FieldTag::U1Plus => Coframe::U1MinusStar,
            FieldTag::U2Plus => Coframe::U2MinusStar,
            FieldTag::U1Minus => Coframe::U1PlusStar,
            FieldTag::U2Minus => Coframe::U2PlusStar,
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldTag::X => "X",
            FieldTag::R => "R",
            FieldTag::U1Plus => "U1+",
            FieldTag::U2Plus => "U2+",
            FieldTag::U1Minus => "U1-",
            FieldTag::U2Minus => "U2-",
        };
        f.write_str(s)
    }
}

/// A basis element of so(1,3) as an integer matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlgebraField {
    pub tag: FieldTag,
    pub matrix: [[i64; 4]; 4],
}

impl AlgebraField {
    pub fn new(tag: FieldTag) -> Self {
        let matrix = match tag {
            FieldTag::X => [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
            FieldTag::R => [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]],
            FieldTag::U1Plus => [[0, 0, -1, 0], [0, 0, -1, 0], [-1, 1, 0, 0], [0, 0, 0, 0]],
            FieldTag::U2Plus => [[0, 0, 0, -1], [0, 0, 0, -1], [0, 0, 0, 0], [-1, 1, 0, 0]],
            FieldTag::U1Minus => [[0, 0, -1, 0], [0, 0, 1, 0], [-1, -1, 0, 0], [0, 0, 0, 0]],
            FieldTag::U2Minus => [[0, 0, 0, -1], [0, 0, 0, 1], [0, 0, 0, 0], [-1, -1, 0, 0]],
        };
        Self { tag, matrix }
    }

    pub fn all() -> [AlgebraField; 6] {
        FieldTag::ALL.map(AlgebraField::new)
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.matrix[i][j] as f64)
    }

    /// `MᵀJ + JM` (zero for elements of so(1,3)).
    pub fn lorentz_defect(&self) -> [[i64; 4]; 4] {
        let j = [1, -1, -1, -1];
        let mut out = [[0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, o) in row.iter_mut().enumerate() {
                *o = self.matrix[c][r] * j[c] + j[r] * self.matrix[r][c];
            }
        }
        out
    }
}

/// Velocities `(ẋ, v̇₁, v̇₂, v̇₃)` of a frame, the columns of `F·M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVelocity(pub [MinkowskiVector; 4]);

pub fn field_at(f: &AlgebraField, frame: &FrameQuadruple) -> FrameVelocity {
    let cols = frame.columns();
    let mut out = [MinkowskiVector::ZERO; 4];
    for (j, o) in out.iter_mut().enumerate() {
        for (i, c) in cols.iter().enumerate() {
            let m = f.matrix[i][j];
            if m != 0 {
                *o += *c * m as f64;
            }
        }
    }
    FrameVelocity(out)
}

/// `dπ_F` of a left-invariant field: the tangent vector `(ẋ, v̇₁)` to SH³.
pub fn project_field(tag: FieldTag, frame: &FrameQuadruple) -> SphereTangent {
    let v = field_at(&AlgebraField::new(tag), frame);
    SphereTangent::new_unchecked(frame.unit_tangent(), v.0[0], v.0[1])
}

fn matmul(a: &[[i64; 4]; 4], b: &[[i64; 4]; 4]) -> [[i64; 4]; 4] {
    let mut out = [[0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn matrix_commutator(a: &AlgebraField, b: &AlgebraField) -> [[i64; 4]; 4] {
    let ab = matmul(&a.matrix, &b.matrix);
    let ba = matmul(&b.matrix, &a.matrix);
    let mut out = [[0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = ab[i][j] - ba[i][j];
        }
    }
    out
}

pub type Rational = Ratio<i64>;

/// Exact solution of `Σ c_k M_k = target` over the six basis matrices.
fn expand_in_basis(target: &[[i64; 4]; 4]) -> Option<[Rational; 6]> {
    let basis = AlgebraField::all();
    // Augmented 16 x 7 system.
    let mut rows: Vec<Vec<Rational>> = (0..16)
        .map(|e| {
            let (i, j) = (e / 4, e % 4);
            let mut r: Vec<Rational> = basis.iter().map(|b| Rational::from_integer(b.matrix[i][j])).collect();
            r.push(Rational::from_integer(target[i][j]));
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..6 {
        let Some(p) = (pivot_row..16).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, p);
        let inv = rows[pivot_row][col].recip();
        for c in 0..7 {
            rows[pivot_row][c] *= inv;
        }
        for r in 0..16 {
            if r != pivot_row && !rows[r][col].is_zero() {
                let f = rows[r][col];
                for c in 0..7 {
                    let d = f * rows[pivot_row][c];
                    rows[r][c] -= d;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    if rows[pivot_row..].iter().any(|r| !r[6].is_zero()) {
        return None;
    }
    let mut out = [Rational::zero(); 6];
    for (r, &c) in pivots.iter().enumerate() {
        out[c] = rows[r][6];
    }
    Some(out)
}

/// Structure constants: `[Y_a, Y_b] = Σ_c table.get(a, b)[c] Y_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorTable {
    entries: [[[Rational; 6]; 6]; 6],
}

impl CommutatorTable {
    pub fn get(&self, a: FieldTag, b: FieldTag) -> &[Rational; 6] {
        &self.entries[a.index()][b.index()]
    }

    /// `c^k_{ab}`.
    pub fn constant(&self, k: FieldTag, a: FieldTag, b: FieldTag) -> Rational {
        self.entries[a.index()][b.index()][k.index()]
    }
}

pub fn commutator_table() -> Result<CommutatorTable, FrameError> {
    let fields = AlgebraField::all();
    let mut entries = [[[Rational::zero(); 6]; 6]; 6];
    for (a, fa) in fields.iter().enumerate() {
        for (b, fb) in fields.iter().enumerate() {
            entries[a][b] = expand_in_basis(&matrix_commutator(fa, fb)).ok_or(FrameError::OutsideSpan(fa.tag, fb.tag))?;
        }
    }
    Ok(CommutatorTable { entries })
}

/// Canonical 1-forms, in the fixed key order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coframe {
    Alpha,
    RStar,
    U1PlusStar,
    U2PlusStar,
    U1MinusStar,
    U2MinusStar,
}

impl Coframe {
    pub const ALL: [Coframe; 6] = [
        Coframe::Alpha,
        Coframe::RStar,
        Coframe::U1PlusStar,
        Coframe::U2PlusStar,
        Coframe::U1MinusStar,
        Coframe::U2MinusStar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn dual_field(self) -> FieldTag {
        match self {
            Coframe::Alpha => FieldTag::X,
            Coframe::RStar => FieldTag::R,
            Coframe::U1PlusStar => FieldTag::U1Minus,
            Coframe::U2PlusStar => FieldTag::U2Minus,
            Coframe::U1MinusStar => FieldTag::U1Plus,
            Coframe::U2MinusStar => FieldTag::U2Plus,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Coframe::Alpha => "α",
            Coframe::RStar => "R*",
            Coframe::U1PlusStar => "U1+*",
            Coframe::U2PlusStar => "U2+*",
            Coframe::U1MinusStar => "U1-*",
            Coframe::U2MinusStar => "U2-*",
        }
    }
}

/// A homogeneous element of the exterior algebra on the canonical coframe,
/// with exact rational coefficients keyed by bitmask over [`Coframe::ALL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoframePolynomial {
    degree: usize,
    terms: BTreeMap<u8, BigRational>,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Sign of the concatenation of two disjoint sorted index sets.
fn merge_sign(a: u8, b: u8) -> i64 {
    let mut inv = 0;
    for i in 0..6 {
        if a & (1 << i) != 0 {
            inv += (b & ((1u8 << i) - 1)).count_ones();
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

impl CoframePolynomial {
    pub fn zero(degree: usize) -> Self {
        Self { degree, terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero(0);
        p.insert(0, c);
        p
    }

    pub fn one() -> Self {
        Self::constant(big(1))
    }

    pub fn symbol(s: Coframe) -> Self {
        let mut p = Self::zero(1);
        p.insert(1 << s.index(), big(1));
        p
    }

    /// Wedge of the given symbols (in the given order).
    pub fn monomial(symbols: &[Coframe]) -> Self {
        symbols.iter().fold(Self::one(), |acc, s| acc.wedge(&Self::symbol(*s)))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<Coframe>, &BigRational)> {
        self.terms.iter().map(|(m, c)| (mask_symbols(*m), c))
    }

    pub fn coeff(&self, symbols: &[Coframe]) -> BigRational {
        let mut sorted = symbols.to_vec();
        sorted.sort();
        let mask = sorted.iter().fold(0u8, |m, s| m | (1 << s.index()));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return BigRational::zero();
        }
        // Sign of the permutation bringing `symbols` into sorted order.
        let mut inv = 0;
        for i in 0..symbols.len() {
            for j in i + 1..symbols.len() {
                if symbols[i] > symbols[j] {
                    inv += 1;
                }
            }
        }
        let c = self.terms.get(&mask).cloned().unwrap_or_default();
        if inv % 2 == 0 {
            c
        } else {
            -c
        }
    }

    fn insert(&mut self, mask: u8, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(mask).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero(self.degree);
        for (m, v) in &self.terms {
            out.insert(*m, v * c);
        }
        out
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&big(c))
    }

    /// Sum of two forms; a zero summand adopts the other's degree.
    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, o.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (m, v) in &o.terms {
            out.insert(*m, v.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale_int(-1))
    }

    pub fn wedge(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.degree + o.degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                if a & b != 0 {
                    continue;
                }
                out.insert(a | b, ca * cb * big(merge_sign(*a, *b)));
            }
        }
        out
    }

    /// Exterior derivative from the structure equations and the graded Leibniz rule.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(self.degree + 1);
        for (mask, c) in &self.terms {
            let syms = mask_symbols(*mask);
            for (j, s) in syms.iter().enumerate() {
                let left = Self::monomial(&syms[..j]);
                let right = Self::monomial(&syms[j + 1..]);
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let term = left.wedge(&coframe_d_symbol(*s)).wedge(&right);
                out = out.add(&term.scale(&(c * big(sign))));
            }
        }
        if out.is_zero() {
            out.degree = self.degree + 1;
        }
        out
    }

    /// Contraction with a left-invariant field, via the duality pairing.
    pub fn interior(&self, field: FieldTag) -> Self {
        let dual = field.dual_symbol();
        let mut out = Self::zero(self.degree.saturating_sub(1));
        for (mask, c) in &self.terms {
            let syms = mask_symbols(*mask);
            if let Some(j) = syms.iter().position(|s| *s == dual) {
                let rest = syms.iter().enumerate().filter(|(i, _)| *i != j).fold(0u8, |m, (_, s)| m | (1 << s.index()));
                out.insert(rest, c * big(if j % 2 == 0 { 1 } else { -1 }));
            }
        }
        out
    }

    /// Cartan's formula `L_Y = d ι_Y + ι_Y d`.
    pub fn lie(&self, field: FieldTag) -> Self {
        let a = self.interior(field).d();
        let b = self.d().interior(field);
        let mut out = a.add(&b);
        out.degree = self.degree;
        out
    }

    pub fn lie_x(&self) -> Self {
        self.lie(FieldTag::X)
    }

    /// `ι_R p = 0` and `L_R p = 0`.
    pub fn descends(&self) -> Result<(), FrameError> {
        if !self.interior(FieldTag::R).is_zero() {
            return Err(FrameError::DescentFailure("ι_R p ≠ 0"));
        }
        if !self.lie(FieldTag::R).is_zero() {
            return Err(FrameError::DescentFailure("L_R p ≠ 0"));
        }
        Ok(())
    }

    pub fn max_abs_f64(&self) -> f64 {
        self.terms.values().map(|c| rational_to_f64(c).abs()).fold(0.0, f64::max)
    }
}

fn rational_to_f64(c: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(f64::NAN)
}

fn mask_symbols(mask: u8) -> Vec<Coframe> {
    Coframe::ALL.iter().copied().filter(|s| mask & (1 << s.index()) != 0).collect()
}

impl fmt::Display for CoframePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (mask, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            let a = c.abs();
            let syms = mask_symbols(*mask);
            if !a.is_one() || syms.is_empty() {
                write!(f, "{a}")?;
                if !syms.is_empty() {
                    f.write_str(" ")?;
                }
            }
            let names: Vec<_> = syms.iter().map(|s| s.name()).collect();
            f.write_str(&names.join("∧"))?;
        }
        Ok(())
    }
}

/// The structure equations for the canonical coframe.
pub fn coframe_d_symbol(s: Coframe) -> CoframePolynomial {
    use Coframe::*;
    let m = CoframePolynomial::monomial;
    match s {
        Alpha => m(&[U1PlusStar, U1MinusStar]).add(&m(&[U2PlusStar, U2MinusStar])).scale_int(2),
        RStar => m(&[U2MinusStar, U1PlusStar]).add(&m(&[U2PlusStar, U1MinusStar])).scale_int(2),
        U1PlusStar => m(&[Alpha, U1PlusStar]).sub(&m(&[RStar, U2PlusStar])),
        U1MinusStar => m(&[Alpha, U1MinusStar]).scale_int(-1).sub(&m(&[RStar, U2MinusStar])),
        U2PlusStar => m(&[Alpha, U2PlusStar]).add(&m(&[RStar, U1PlusStar])),
        U2MinusStar => m(&[Alpha, U2MinusStar]).scale_int(-1).add(&m(&[RStar, U1MinusStar])),
    }
}

pub fn coframe_d(p: &CoframePolynomial) -> CoframePolynomial {
    p.d()
}

pub fn coframe_lie_x(p: &CoframePolynomial) -> CoframePolynomial {
    p.lie_x()
}

/// Named forms built from the coframe.
pub mod forms {
    use super::Coframe::*;
    use super::CoframePolynomial;

    pub fn alpha() -> CoframePolynomial {
        CoframePolynomial::symbol(Alpha)
    }

    pub fn d_alpha() -> CoframePolynomial {
        alpha().d()
    }

    /// `ψ = 2(U₁^{+*}∧U₂^{-*} + U₁^{-*}∧U₂^{+*})`.
    pub fn psi() -> CoframePolynomial {
        let m = CoframePolynomial::monomial;
        m(&[U1PlusStar, U2MinusStar]).add(&m(&[U1MinusStar, U2PlusStar])).scale_int(2)
    }

    pub fn omega_plus() -> CoframePolynomial {
        CoframePolynomial::monomial(&[U1PlusStar, U2PlusStar])
    }

    pub fn omega_minus() -> CoframePolynomial {
        CoframePolynomial::monomial(&[U1MinusStar, U2MinusStar])
    }

    pub fn dvol_alpha() -> CoframePolynomial {
        let da = d_alpha();
        alpha().wedge(&da).wedge(&da)
    }
}

/// Values of the six canonical 1-forms on a tangent vector to SH³ at the
/// frame's base `(x, v₁)`, using the lift with vanishing `R*` component.
pub fn coframe_values(frame: &FrameQuadruple, xi: &SphereTangent) -> [f64; 6] {
    let x = &frame.x;
    let xi_v = xi.xi_v + *x * mink_inner(&frame.v1, &xi.xi_x);
    let a = g_inner(&xi.xi_x, &frame.v1);
    let (h2, k2) = (g_inner(&xi.xi_x, &frame.v2), g_inner(&xi_v, &frame.v2));
    let (h3, k3) = (g_inner(&xi.xi_x, &frame.v3), g_inner(&xi_v, &frame.v3));
    let (c1p, c1m) = (0.5 * (k2 - h2), -0.5 * (h2 + k2));
    let (c2p, c2m) = (0.5 * (k3 - h3), -0.5 * (h3 + k3));
    [a, 0.0, c1m, c2m, c1p, c2p]
}

/// The alternating form on `T SH³` (in coordinates of `basis`) induced by a
/// descending coframe polynomial.
pub fn coframe_realize(
    p: &CoframePolynomial,
    frame: &FrameQuadruple,
    basis: &[SphereTangent],
) -> Result<AlternatingForm, FrameError> {
    p.descends()?;
    let base = frame.unit_tangent();
    if basis.iter().any(|b| (b.base.x - base.x).max_abs() > 1e-12 || (b.base.v - base.v).max_abs() > 1e-12) {
        return Err(FrameError::BaseMismatch);
    }
    let n = basis.len();
    let vals: Vec<[f64; 6]> = basis.iter().map(|b| coframe_values(frame, b)).collect();
    let cov: Vec<AlternatingForm> = (0..6)
        .map(|s| AlternatingForm::covector(&vals.iter().map(|v| v[s]).collect::<Vec<_>>()))
        .collect();
    let mut out = AlternatingForm::zero(n, p.degree());
    for (syms, c) in p.terms() {
        let mut t = AlternatingForm::scalar(n, rational_to_f64(c));
        for s in syms {
            t = t.wedge(&cov[s.index()]).expect("dimensions agree");
        }
        out = out.try_add(&t).expect("degrees agree");
    }
    Ok(out)
}

/// Evaluate a descending polynomial directly on tangent vectors to SH³.
pub fn coframe_eval(p: &CoframePolynomial, frame: &FrameQuadruple, vectors: &[SphereTangent]) -> Result<f64, FrameError> {
    p.descends()?;
    let vals: Vec<[f64; 6]> = vectors.iter().map(|b| coframe_values(frame, b)).collect();
    let k = vectors.len();
    if k != p.degree() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for (syms, c) in p.terms() {
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| vals[j][syms[i].index()]);
        total += rational_to_f64(c) * if k == 0 { 1.0 } else { m.determinant() };
    }
    Ok(total)
}

/// A curve `h ↦ π_F(F·exp(hM))` on SH³ whose velocity at `h = 0` is `xi`,
/// with `M` the combination of `X, U_i^±` projecting onto `xi`.
pub fn tangent_curve(frame: &FrameQuadruple, xi: &SphereTangent) -> Result<impl Fn(f64) -> UnitTangent, FrameError> {
    let tags = [FieldTag::X, FieldTag::U1Plus, FieldTag::U2Plus, FieldTag::U1Minus, FieldTag::U2Minus];
    let fields: Vec<SphereTangent> = tags.iter().map(|t| project_field(*t, frame)).collect();
    let c = crate::hyperboloid::coordinates(&fields, xi)?;
    let mut m = Matrix4::zeros();
    for (ci, t) in c.iter().zip(tags) {
        m += AlgebraField::new(t).to_matrix4() * *ci;
    }
    let f = frame.matrix();
    Ok(move |h: f64| FrameQuadruple::from_matrix(&(f * (m * h).exp())).unit_tangent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Coframe::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn matrices_are_in_so13() {
        for f in AlgebraField::all() {
            assert_eq!(f.lorentz_defect(), [[0; 4]; 4], "{}", f.tag);
        }
    }

    #[test]
    fn field_values_at_standard_frame() {
        let e = MinkowskiVector::basis;
        let f = FrameQuadruple::standard();
        let x = field_at(&AlgebraField::new(FieldTag::X), &f);
        assert_eq!(x.0, [e(1), e(0), MinkowskiVector::ZERO, MinkowskiVector::ZERO]);
        let rr = field_at(&AlgebraField::new(FieldTag::R), &f);
        assert_eq!(rr.0, [MinkowskiVector::ZERO, MinkowskiVector::ZERO, -e(3), e(2)]);
        let u = field_at(&AlgebraField::new(FieldTag::U1Plus), &f);
        assert_eq!(u.0, [-e(2), e(2), -e(0) - e(1), MinkowskiVector::ZERO]);
    }

    #[test]
    fn selected_commutators() {
        use FieldTag::*;
        let t = commutator_table().unwrap();
        let only = |k: FieldTag, c: i64| {
            let mut v = [r(0); 6];
            v[k.index()] = r(c);
            v
        };
        assert_eq!(*t.get(U1Plus, U1Minus), only(X, 2));
        assert_eq!(*t.get(U1Plus, U2Minus), only(R, 2));
        assert_eq!(*t.get(X, R), [r(0); 6]);
        assert_eq!(*t.get(X, U2Minus), only(U2Minus, -1));
    }

    #[test]
    fn structure_equation_examples() {
        let m = CoframePolynomial::monomial;
        let da = CoframePolynomial::symbol(Alpha).d();
        assert_eq!(da, m(&[U1PlusStar, U1MinusStar]).add(&m(&[U2PlusStar, U2MinusStar])).scale_int(2));
        let du = CoframePolynomial::symbol(U1PlusStar).d();
        assert_eq!(du, m(&[Alpha, U1PlusStar]).sub(&m(&[RStar, U2PlusStar])));
        assert!(da.d().is_zero());
    }

    #[test]
    fn lie_derivatives() {
        let u = CoframePolynomial::symbol(U1MinusStar);
        assert_eq!(u.lie_x(), u.scale_int(-1));
        assert!(forms::alpha().lie_x().is_zero());
        assert!(forms::psi().lie_x().is_zero());
    }

    #[test]
    fn descent() {
        assert!(forms::alpha().descends().is_ok());
        assert!(forms::psi().descends().is_ok());
        assert!(CoframePolynomial::symbol(U1PlusStar).descends().is_err());
    }

    #[test]
    fn realized_duality() {
        let f = FrameQuadruple::standard();
        let x = project_field(FieldTag::X, &f);
        let a = coframe_eval(&forms::alpha(), &f, &[x]).unwrap();
        assert_eq!(a, 1.0);
        let v = coframe_values(&f, &project_field(FieldTag::U1Plus, &f));
        assert_eq!(v[U1PlusStar.index()], 0.0);
        assert_eq!(v[U1MinusStar.index()], 1.0);
    }

    #[test]
    fn tangent_curve_velocity() {
        let f = FrameQuadruple::from_matrix(&crate::hyperboloid::algebra_exp(&[0.3, -0.2, 0.5, 0.1, 0.7, -0.4]));
        let p = f.unit_tangent();
        let xi = crate::hyperboloid::standard_basis(&p)[3].add(&crate::hyperboloid::generator(&p).scale(0.5));
        let c = tangent_curve(&f, &xi).unwrap();
        let h = 1e-5;
        let (a, b) = (c(h), c(-h));
        let dx = (a.x - b.x) * (0.5 / h);
        let dv = (a.v - b.v) * (0.5 / h);
        assert!((dx - xi.xi_x).max_abs() < 1e-8 && (dv - xi.xi_v).max_abs() < 1e-8);
        assert!((c(0.0).x - p.x).max_abs() < 1e-14);
    }

    #[test]
    fn field_matches_matrix_flow() {
        let f = FrameQuadruple::from_matrix(&crate::hyperboloid::algebra_exp(&[0.1, 0.4, -0.3, 0.2, 0.0, 0.6]));
        let h = 1e-6;
        for a in AlgebraField::all() {
            let m = a.to_matrix4();
            let fd = (f.matrix() * (m * h).exp() - f.matrix() * (m * -h).exp()) / (2.0 * h);
            let v = field_at(&a, &f);
            for j in 0..4 {
                let col = MinkowskiVector::from_vector4(&fd.column(j).into_owned());
                assert!((col - v.0[j]).max_abs() < 1e-6, "{}", a.tag);
            }
        }
    }

    #[test]
    fn display() {
        assert_eq!(forms::d_alpha().to_string(), "2 U1+*∧U1-* + 2 U2+*∧U2-*");
        assert_eq!(CoframePolynomial::zero(2).to_string(), "0");
    }
}
