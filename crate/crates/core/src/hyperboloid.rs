//! The hyperboloid model of H³ and its unit tangent bundle SH³.
//!
//! Tangent vectors to SH³ ⊂ R^{1,3} × R^{1,3} are pairs `(ξ_x, ξ_v)`.
//! The Riemannian metric on H³ is `g = -⟨·,·⟩_M` restricted to `T_xH³`.

use nalgebra::{DMatrix, DVector, Matrix4};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior_core::{det4, mink_inner, AlternatingForm, MinkowskiVector};

pub const POINT_TOL: f64 = 1e-12;
pub const TANGENT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is not on the upper hyperboloid (⟨x,x⟩ - 1 = {defect:e})")]
    NotOnHyperboloid { defect: f64 },
    #[error("not a unit tangent vector (defect {defect:e})")]
    NotUnitTangent { defect: f64 },
    #[error("vector is not tangent to SH³ (defect {defect:e})")]
    NotTangent { defect: f64 },
    #[error("degenerate tangent basis")]
    DegenerateBasis,
    #[error("base points differ")]
    BaseMismatch,
}

fn scale_of(v: &MinkowskiVector) -> f64 {
    v.max_abs().max(1.0)
}

/// `g(a, b) = -⟨a, b⟩_M` for tangent vectors.
pub fn g_inner(a: &MinkowskiVector, b: &MinkowskiVector) -> f64 {
    -mink_inner(a, b)
}

/// A point of H³: `⟨x,x⟩_M = 1`, `x_0 > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H3Point(MinkowskiVector);

impl H3Point {
    pub fn new(x: MinkowskiVector) -> Result<Self, GeometryError> {
        let defect = mink_inner(&x, &x) - 1.0;
        if x.0[0] <= 0.0 || defect.abs() > POINT_TOL * scale_of(&x).powi(2) {
            return Err(GeometryError::NotOnHyperboloid { defect });
        }
        Ok(Self(x))
    }

    pub fn origin() -> Self {
        Self(MinkowskiVector::basis(0))
    }

    /// `(cosh r, sinh r · n)` for a unit direction `n ∈ R³`.
    pub fn from_polar(r: f64, n: [f64; 3]) -> Self {
        let (s, c) = (r.sinh(), r.cosh());
        Self(MinkowskiVector::new(c, s * n[0], s * n[1], s * n[2]))
    }

    /// Re-project a nearby vector onto the hyperboloid.
    pub fn normalized(x: MinkowskiVector) -> Self {
        let s = x.spatial();
        let n2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
        Self(MinkowskiVector::new((1.0 + n2).sqrt(), s[0], s[1], s[2]))
    }

    pub fn coords(&self) -> &MinkowskiVector {
        &self.0
    }

    pub fn transform(&self, gamma: &Matrix4<f64>) -> Self {
        Self(self.0.transform(gamma))
    }
}

/// A unit tangent vector `(x, v)`: `⟨v,v⟩ = -1`, `⟨x,v⟩ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitTangent {
    pub x: MinkowskiVector,
    pub v: MinkowskiVector,
}

impl UnitTangent {
    pub fn new(x: MinkowskiVector, v: MinkowskiVector) -> Result<Self, GeometryError> {
        H3Point::new(x)?;
        let s = scale_of(&x).max(scale_of(&v)).powi(2);
        let defect = (mink_inner(&v, &v) + 1.0).abs().max(mink_inner(&x, &v).abs());
        if defect > POINT_TOL * s {
            return Err(GeometryError::NotUnitTangent { defect });
        }
        Ok(Self { x, v })
    }

    /// `(e_0, e_1)`.
    pub fn standard() -> Self {
        Self { x: MinkowskiVector::basis(0), v: MinkowskiVector::basis(1) }
    }

    pub fn point(&self) -> H3Point {
        H3Point(self.x)
    }

    pub fn transform(&self, gamma: &Matrix4<f64>) -> Self {
        Self { x: self.x.transform(gamma), v: self.v.transform(gamma) }
    }

    /// Invariant defect `max(|⟨x,x⟩-1|, |⟨v,v⟩+1|, |⟨x,v⟩|)`.
    pub fn defect(&self) -> f64 {
        (mink_inner(&self.x, &self.x) - 1.0)
            .abs()
            .max((mink_inner(&self.v, &self.v) + 1.0).abs())
            .max(mink_inner(&self.x, &self.v).abs())
    }
}

/// A tangent vector `(ξ_x, ξ_v)` to SH³ at `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereTangent {
    pub base: UnitTangent,
    pub xi_x: MinkowskiVector,
    pub xi_v: MinkowskiVector,
}

impl SphereTangent {
    pub fn new(base: UnitTangent, xi_x: MinkowskiVector, xi_v: MinkowskiVector) -> Result<Self, GeometryError> {
        let t = Self { base, xi_x, xi_v };
        let s = scale_of(&base.x).max(scale_of(&base.v)) * scale_of(&xi_x).max(scale_of(&xi_v));
        let d = t.defect();
        if d > TANGENT_TOL * s {
            return Err(GeometryError::NotTangent { defect: d });
        }
        Ok(t)
    }

    pub fn new_unchecked(base: UnitTangent, xi_x: MinkowskiVector, xi_v: MinkowskiVector) -> Self {
        Self { base, xi_x, xi_v }
    }

    pub fn defect(&self) -> f64 {
        let (x, v) = (&self.base.x, &self.base.v);
        mink_inner(x, &self.xi_x)
            .abs()
            .max(mink_inner(v, &self.xi_v).abs())
            .max((mink_inner(x, &self.xi_v) + mink_inner(v, &self.xi_x)).abs())
    }

    pub fn zero(base: UnitTangent) -> Self {
        Self { base, xi_x: MinkowskiVector::ZERO, xi_v: MinkowskiVector::ZERO }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { base: self.base, xi_x: self.xi_x * s, xi_v: self.xi_v * s }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { base: self.base, xi_x: self.xi_x + o.xi_x, xi_v: self.xi_v + o.xi_v }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// The eight ambient components `(ξ_x, ξ_v)`.
    pub fn ambient(&self) -> [f64; 8] {
        let mut a = [0.0; 8];
        a[..4].copy_from_slice(&self.xi_x.0);
        a[4..].copy_from_slice(&self.xi_v.0);
        a
    }
}

/// Horizontal/vertical components of a tangent vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HVSplit {
    pub xi_h: MinkowskiVector,
    pub xi_v: MinkowskiVector,
}

pub fn dist(x: &H3Point, y: &H3Point) -> f64 {
    mink_inner(&x.0, &y.0).max(1.0).acosh()
}

pub fn geodesic_flow(p: &UnitTangent, t: f64) -> UnitTangent {
    let (s, c) = (t.sinh(), t.cosh());
    UnitTangent { x: p.x * c + p.v * s, v: p.x * s + p.v * c }
}

/// The differential of the flow, `dφ_t(ξ_x, ξ_v)`, based at `φ_t(p)`.
pub fn flow_differential(xi: &SphereTangent, t: f64) -> SphereTangent {
    let (s, c) = (t.sinh(), t.cosh());
    SphereTangent {
        base: geodesic_flow(&xi.base, t),
        xi_x: xi.xi_x * c + xi.xi_v * s,
        xi_v: xi.xi_x * s + xi.xi_v * c,
    }
}

/// `ξ_H = ξ_x`, `ξ_V = ξ_v + ⟨v, ξ_x⟩ x`.
pub fn hv_split(xi: &SphereTangent) -> Result<HVSplit, GeometryError> {
    let d = xi.defect();
    if d > 1e-8 * scale_of(&xi.base.x) * scale_of(&xi.xi_x).max(scale_of(&xi.xi_v)) {
        return Err(GeometryError::NotTangent { defect: d });
    }
    Ok(hv_split_unchecked(xi))
}

pub fn hv_split_unchecked(xi: &SphereTangent) -> HVSplit {
    HVSplit { xi_h: xi.xi_x, xi_v: xi.xi_v + xi.base.x * mink_inner(&xi.base.v, &xi.xi_x) }
}

/// Inverse of [`hv_split`].
pub fn hv_join(base: &UnitTangent, hv: &HVSplit) -> SphereTangent {
    SphereTangent { base: *base, xi_x: hv.xi_h, xi_v: hv.xi_v - base.x * mink_inner(&base.v, &hv.xi_h) }
}

/// The lift `(w, 0)` in H/V terms of `w ∈ T_xH³`.
pub fn horizontal_lift(p: &UnitTangent, w: &MinkowskiVector) -> SphereTangent {
    hv_join(p, &HVSplit { xi_h: *w, xi_v: MinkowskiVector::ZERO })
}

/// The lift `(0, w)` in H/V terms of `w ⊥ x, v`.
pub fn vertical_lift(p: &UnitTangent, w: &MinkowskiVector) -> SphereTangent {
    hv_join(p, &HVSplit { xi_h: MinkowskiVector::ZERO, xi_v: *w })
}

/// The generator `X = (v, x)` of the geodesic flow.
pub fn generator(p: &UnitTangent) -> SphereTangent {
    SphereTangent { base: *p, xi_x: p.v, xi_v: p.x }
}

pub fn sasaki_inner(a: &SphereTangent, b: &SphereTangent) -> f64 {
    let v = &a.base.v;
    -mink_inner(&a.xi_x, &b.xi_x) - mink_inner(&a.xi_v, &b.xi_v) + mink_inner(v, &a.xi_x) * mink_inner(v, &b.xi_x)
}

pub fn sasaki_norm(a: &SphereTangent) -> f64 {
    sasaki_inner(a, a).max(0.0).sqrt()
}

/// `α(ξ) = g(ξ_H, v)`.
pub fn alpha(xi: &SphereTangent) -> f64 {
    g_inner(&xi.xi_x, &xi.base.v)
}

/// `dα(ξ, η) = g(ξ_V, η_H) - g(ξ_H, η_V)`.
pub fn d_alpha(xi: &SphereTangent, eta: &SphereTangent) -> f64 {
    let a = hv_split_unchecked(xi);
    let b = hv_split_unchecked(eta);
    g_inner(&a.xi_v, &b.xi_h) - g_inner(&a.xi_h, &b.xi_v)
}

/// Pointwise contact data expressed in a supplied basis of `T_p SH³`.
#[derive(Clone, Debug)]
pub struct ContactData {
    pub alpha: AlternatingForm,
    pub d_alpha: AlternatingForm,
    pub dvol: AlternatingForm,
}

/// Check that five tangent vectors span `T_p SH³`.
pub fn check_basis(basis: &[SphereTangent]) -> Result<(), GeometryError> {
    if basis.len() != 5 {
        return Err(GeometryError::DegenerateBasis);
    }
    let gram = DMatrix::from_fn(5, 5, |i, j| sasaki_inner(&basis[i], &basis[j]));
    let sv = gram.singular_values();
    let smax = sv.max();
    if smax == 0.0 || sv.min() < 1e-12 * smax {
        return Err(GeometryError::DegenerateBasis);
    }
    Ok(())
}

pub fn contact_data_at(p: &UnitTangent, basis: &[SphereTangent]) -> Result<ContactData, GeometryError> {
    check_basis(basis)?;
    if basis.iter().any(|b| b.base != *p) {
        return Err(GeometryError::BaseMismatch);
    }
    let alpha_f = AlternatingForm::from_fn(5, 1, |i| alpha(&basis[i[0]]));
    let d_alpha_f = AlternatingForm::from_fn(5, 2, |i| d_alpha(&basis[i[0]], &basis[i[1]]));
    let dvol = alpha_f
        .wedge(&d_alpha_f)
        .and_then(|f| f.wedge(&d_alpha_f))
        .expect("same ambient dimension");
    Ok(ContactData { alpha: alpha_f, d_alpha: d_alpha_f, dvol })
}

/// Coordinates of `xi` in a basis of `T_p SH³`, via the Sasaki Gram matrix.
pub fn coordinates(basis: &[SphereTangent], xi: &SphereTangent) -> Result<Vec<f64>, GeometryError> {
    let n = basis.len();
    let gram = DMatrix::from_fn(n, n, |i, j| sasaki_inner(&basis[i], &basis[j]));
    let rhs = DVector::from_fn(n, |i, _| sasaki_inner(&basis[i], xi));
    let sol = gram.lu().solve(&rhs).ok_or(GeometryError::DegenerateBasis)?;
    Ok(sol.iter().copied().collect())
}

/// Decomposition `ξ = a X + (w_u, w_u) + (w_s, -w_s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StunSplit {
    pub flow: f64,
    pub unstable: MinkowskiVector,
    pub stable: MinkowskiVector,
}

pub fn stun_split(xi: &SphereTangent) -> StunSplit {
    let p = &xi.base;
    let a = alpha(xi);
    let hv = hv_split_unchecked(xi);
    // Remove the flow direction: X has H = v, V = 0.
    let h = hv.xi_h - p.v * a;
    let vert = hv.xi_v;
    // (w,w) has H = w, V = w; (w,-w) has H = w, V = -w.
    StunSplit { flow: a, unstable: (h + vert) * 0.5, stable: (h - vert) * 0.5 }
}

pub fn stun_join(p: &UnitTangent, s: &StunSplit) -> SphereTangent {
    let x = generator(p).scale(s.flow);
    let u = SphereTangent { base: *p, xi_x: s.unstable, xi_v: s.unstable };
    let st = SphereTangent { base: *p, xi_x: s.stable, xi_v: -s.stable };
    x.add(&u).add(&st)
}

/// `J(x, v) = (x, -v)`.
pub fn antipodal(p: &UnitTangent) -> UnitTangent {
    UnitTangent { x: p.x, v: -p.v }
}

pub fn antipodal_differential(xi: &SphereTangent) -> SphereTangent {
    SphereTangent { base: antipodal(&xi.base), xi_x: xi.xi_x, xi_v: -xi.xi_v }
}

/// Cross product on `T_xH³`, oriented so that `(a, b, c)` is positive iff
/// `det(x, a, b, c) > 0`; at `e_0`, `e_1 × e_2 = e_3`.
pub fn cross_product(x: &MinkowskiVector, a: &MinkowskiVector, b: &MinkowskiVector) -> MinkowskiVector {
    let mut d = [0.0; 4];
    for (mu, dm) in d.iter_mut().enumerate() {
        *dm = det4(&MinkowskiVector::basis(mu), x, a, b);
    }
    MinkowskiVector::new(d[0], -d[1], -d[2], -d[3])
}

/// Orientation test `det(x, a, b, c)`.
pub fn orientation(x: &MinkowskiVector, a: &MinkowskiVector, b: &MinkowskiVector, c: &MinkowskiVector) -> f64 {
    det4(x, a, b, c)
}

/// Project `w` onto `T_xH³` and the `g`-orthogonal complement of `others`.
fn gram_schmidt(x: &MinkowskiVector, others: &[MinkowskiVector], w: &MinkowskiVector) -> MinkowskiVector {
    let mut u = *w - *x * mink_inner(x, w);
    for o in others {
        u += *o * mink_inner(o, &u);
    }
    u
}

/// `(w1, w2)` with `(v, w1, w2)` a positive `g`-orthonormal basis of `T_xH³`,
/// by Minkowski Gram–Schmidt from the seed basis with pivot selection.
pub fn tangent_frame(p: &UnitTangent) -> (MinkowskiVector, MinkowskiVector) {
    let seeds = [1, 2, 3, 0].map(MinkowskiVector::basis);
    let w1 = seeds
        .iter()
        .map(|s| gram_schmidt(&p.x, &[p.v], s))
        .max_by(|a, b| (-mink_inner(a, a)).total_cmp(&(-mink_inner(b, b))))
        .expect("seeds");
    let w1 = w1 * (1.0 / (-mink_inner(&w1, &w1)).sqrt());
    let w2 = cross_product(&p.x, &p.v, &w1);
    (w1, w2)
}

/// The basis `(X, (w1,0), (w2,0), (0,w1), (0,w2))` in H/V terms.
pub fn standard_basis(p: &UnitTangent) -> [SphereTangent; 5] {
    let (w1, w2) = tangent_frame(p);
    [
        generator(p),
        horizontal_lift(p, &w1),
        horizontal_lift(p, &w2),
        vertical_lift(p, &w1),
        vertical_lift(p, &w2),
    ]
}

/// `g`-orthonormal positive basis `(e1, e2, e3)` of `T_xH³`.
pub fn point_frame(x: &H3Point) -> [MinkowskiVector; 3] {
    let b = boost_from_origin(x);
    [1, 2, 3].map(|i| MinkowskiVector::basis(i).transform(&b))
}

/// Point at distance `t|w|` along the geodesic from `x` with initial velocity `w`.
pub fn exp_map(x: &H3Point, w: &MinkowskiVector, t: f64) -> H3Point {
    let n = (-mink_inner(w, w)).max(0.0).sqrt();
    if n == 0.0 {
        return *x;
    }
    let r = n * t;
    H3Point(x.0 * r.cosh() + *w * (r.sinh() / n))
}

/// Laplace–Beltrami operator `Δ f(x)` (sum of second derivatives in geodesic
/// normal coordinates), central differences Richardson-extrapolated in `h`.
pub fn laplacian_fd(f: &dyn Fn(&H3Point) -> f64, x: &H3Point, h: f64) -> f64 {
    let frame = point_frame(x);
    let f0 = f(x);
    let stencil = |h: f64| -> f64 {
        frame
            .iter()
            .map(|e| f(&exp_map(x, e, h)) + f(&exp_map(x, e, -h)) - 2.0 * f0)
            .sum::<f64>()
            / (h * h)
    };
    let (a, b) = (stencil(h), stencil(0.5 * h));
    (4.0 * b - a) / 3.0
}

/// The pure boost `B` with `B e_0 = x`.
pub fn boost_from_origin(x: &H3Point) -> Matrix4<f64> {
    let c = x.0;
    let s = c.spatial();
    let k = 1.0 / (1.0 + c.0[0]);
    let mut m = Matrix4::identity();
    m[(0, 0)] = c.0[0];
    for i in 0..3 {
        m[(0, i + 1)] = s[i];
        m[(i + 1, 0)] = s[i];
        for j in 0..3 {
            m[(i + 1, j + 1)] += k * s[i] * s[j];
        }
    }
    m
}

/// Basis of so(1,3): boosts `K_1..K_3` then rotations `J_1..J_3`.
pub fn so13_basis() -> [Matrix4<f64>; 6] {
    let mut out = [Matrix4::zeros(); 6];
    for i in 0..3 {
        out[i][(0, i + 1)] = 1.0;
        out[i][(i + 1, 0)] = 1.0;
    }
    for (k, (a, b)) in [(2, 3), (3, 1), (1, 2)].into_iter().enumerate() {
        out[3 + k][(b, a)] = 1.0;
        out[3 + k][(a, b)] = -1.0;
    }
    out
}

/// `exp(Σ c_i G_i)` in SO₊(1,3).
pub fn algebra_exp(c: &[f64; 6]) -> Matrix4<f64> {
    let basis = so13_basis();
    let mut m = Matrix4::zeros();
    for (ci, g) in c.iter().zip(&basis) {
        m += g * *ci;
    }
    m.exp()
}

/// Random SO₊(1,3) element `exp(A)` with `|A|` (coefficient norm) ≤ `max_norm`.
pub fn random_lorentz<R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> Matrix4<f64> {
    let mut c = [0.0; 6];
    for ci in c.iter_mut() {
        *ci = StandardNormal.sample(rng);
    }
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r: f64 = rng.random::<f64>() * max_norm;
    let c = c.map(|x| x * r / n);
    algebra_exp(&c)
}

pub fn random_unit3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return v.map(|x| x / n);
        }
    }
}

/// Random point within distance `max_dist` of `e_0`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, max_dist: f64) -> H3Point {
    let r = rng.random::<f64>() * max_dist;
    H3Point::from_polar(r, random_unit3(rng))
}

/// Random unit tangent based within distance `max_dist` of `e_0`.
pub fn random_unit_tangent<R: Rng + ?Sized>(rng: &mut R, max_dist: f64) -> UnitTangent {
    let x = random_point(rng, max_dist);
    let b = boost_from_origin(&x);
    let w = random_unit3(rng);
    UnitTangent { x: x.0, v: MinkowskiVector::from_parts(0.0, w).transform(&b) }
}

/// Random vector in `T_xH³` with standard normal frame coordinates.
pub fn random_tangent_at<R: Rng + ?Sized>(rng: &mut R, x: &H3Point) -> MinkowskiVector {
    let f = point_frame(x);
    let c: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
    f[0] * c[0] + f[1] * c[1] + f[2] * c[2]
}

/// Random tangent vector to SH³ at `p`.
pub fn random_sphere_tangent<R: Rng + ?Sized>(rng: &mut R, p: &UnitTangent) -> SphereTangent {
    let b = standard_basis(p);
    let mut out = SphereTangent::zero(*p);
    for bi in &b {
        let c: f64 = StandardNormal.sample(rng);
        out = out.add(&bi.scale(c));
    }
    out
}

pub fn is_lorentz(gamma: &Matrix4<f64>, tol: f64) -> bool {
    let j = crate::exterior_core::minkowski_gram();
    (gamma.transpose() * j * gamma - j).amax() <= tol * gamma.amax().max(1.0).powi(2) && gamma[(0, 0)] > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dist_examples() {
        let o = H3Point::origin();
        assert_eq!(dist(&o, &o), 0.0);
        let y = H3Point::new(MinkowskiVector::new(1f64.cosh(), 1f64.sinh(), 0.0, 0.0)).unwrap();
        assert!((dist(&o, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_example() {
        let p = geodesic_flow(&UnitTangent::standard(), 1.0);
        let (s, c) = (1f64.sinh(), 1f64.cosh());
        assert_eq!(p.x, MinkowskiVector::new(c, s, 0.0, 0.0));
        assert_eq!(p.v, MinkowskiVector::new(s, c, 0.0, 0.0));
        assert_eq!(geodesic_flow(&UnitTangent::standard(), 0.0), UnitTangent::standard());
    }

    #[test]
    fn generator_split() {
        let p = UnitTangent::standard();
        let hv = hv_split(&generator(&p)).unwrap();
        assert_eq!(hv.xi_h, p.v);
        assert_eq!(hv.xi_v, MinkowskiVector::ZERO);
        let w = MinkowskiVector::basis(2);
        let hv = hv_split(&vertical_lift(&p, &w)).unwrap();
        assert_eq!(hv.xi_h, MinkowskiVector::ZERO);
        assert_eq!(hv.xi_v, w);
    }

    #[test]
    fn cross_product_orientation() {
        let e = MinkowskiVector::basis;
        assert_eq!(cross_product(&e(0), &e(1), &e(2)), e(3));
        assert_eq!(cross_product(&e(0), &e(2), &e(2)), MinkowskiVector::ZERO);
    }

    #[test]
    fn alpha_and_reeb() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_unit_tangent(&mut rng, 2.0);
            let x = generator(&p);
            assert!((alpha(&x) - 1.0).abs() < 1e-12);
            let eta = random_sphere_tangent(&mut rng, &p);
            assert!(d_alpha(&x, &eta).abs() < 1e-11);
        }
    }

    #[test]
    fn dvol_on_standard_basis() {
        let p = UnitTangent::standard();
        let b = standard_basis(&p);
        let cd = contact_data_at(&p, &b).unwrap();
        assert!((cd.dvol.coeffs()[0] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn stun_examples() {
        let p = UnitTangent::standard();
        let s = stun_split(&generator(&p));
        assert_eq!((s.flow, s.unstable, s.stable), (1.0, MinkowskiVector::ZERO, MinkowskiVector::ZERO));
        let w = MinkowskiVector::basis(3);
        let s = stun_split(&SphereTangent::new(p, w, w).unwrap());
        assert_eq!((s.flow, s.unstable, s.stable), (0.0, w, MinkowskiVector::ZERO));
    }

    #[test]
    fn antipodal_examples() {
        let p = UnitTangent::standard();
        assert_eq!(antipodal(&antipodal(&p)), p);
        assert_eq!(antipodal(&p).v, -MinkowskiVector::basis(1));
    }

    #[test]
    fn frames_are_positive_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_unit_tangent(&mut rng, 3.0);
            let (w1, w2) = tangent_frame(&p);
            assert!((g_inner(&w1, &w1) - 1.0).abs() < 1e-10);
            assert!(g_inner(&w1, &w2).abs() < 1e-10);
            assert!(g_inner(&p.v, &w1).abs() < 1e-10);
            assert!(mink_inner(&p.x, &w2).abs() < 1e-10);
            assert!((orientation(&p.x, &p.v, &w1, &w2) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn boosts_and_exponentials_are_lorentz() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let g = random_lorentz(&mut rng, 1.0);
            assert!(is_lorentz(&g, 1e-12));
            assert!((g.determinant() - 1.0).abs() < 1e-10);
            let x = random_point(&mut rng, 3.0);
            let b = boost_from_origin(&x);
            assert!(is_lorentz(&b, 1e-12));
            let bx = H3Point::origin().transform(&b);
            assert!((bx.coords().0[0] - x.coords().0[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_distance_cosh() {
        // Δ cosh d(e0, ·) = 3 cosh d on H³.
        let f = |y: &H3Point| y.coords().0[0];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = random_point(&mut rng, 1.5);
            let l = laplacian_fd(&f, &x, 1e-3);
            assert!((l - 3.0 * f(&x)).abs() < 1e-7 * f(&x));
        }
    }
}
