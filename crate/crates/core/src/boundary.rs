//! Conformal infinity: the maps Φ_±, B_±, the Poisson kernel, the inverse
//! maps v_±, the Möbius action and the coordinates Ξ = (ν₋, ν₊, t).

use nalgebra::{Matrix4, Matrix5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior_core::{mink_inner, MinkowskiVector};
use crate::frame_bundle::{tangent_curve, FrameQuadruple};
use crate::hyperboloid::{is_lorentz, standard_basis, H3Point, SphereTangent, UnitTangent};
use crate::quadrature::{complete_frame3, dot3, norm3, scale3, sub3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("not a unit vector (|ν| - 1 = {0:e})")]
    NotUnit(f64),
    #[error("boundary points coincide (separation {0:e})")]
    Coincident(f64),
    #[error("matrix is not in SO₊(1,3)")]
    NotLorentz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A point of S² ⊂ R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub nu: [f64; 3],
}

impl BoundaryPoint {
    pub fn new(nu: [f64; 3]) -> Result<Self, BoundaryError> {
        let d = norm3(&nu) - 1.0;
        if d.abs() > 1e-12 {
            return Err(BoundaryError::NotUnit(d));
        }
        Ok(Self { nu })
    }

    pub fn normalized(nu: [f64; 3]) -> Self {
        Self { nu: scale3(&nu, 1.0 / norm3(&nu)) }
    }

    /// `(1, ν)`.
    pub fn lift(&self) -> MinkowskiVector {
        MinkowskiVector::from_parts(1.0, self.nu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiCoordinates {
    pub nu_minus: BoundaryPoint,
    pub nu_plus: BoundaryPoint,
    pub t: f64,
}

pub const MIN_SEPARATION: f64 = 1e-8;

impl XiCoordinates {
    pub fn new(nu_minus: BoundaryPoint, nu_plus: BoundaryPoint, t: f64) -> Result<Self, BoundaryError> {
        let sep = norm3(&sub3(&nu_minus.nu, &nu_plus.nu));
        if sep <= MIN_SEPARATION {
            return Err(BoundaryError::Coincident(sep));
        }
        Ok(Self { nu_minus, nu_plus, t })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMaps {
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub b_minus: BoundaryPoint,
    pub b_plus: BoundaryPoint,
}

impl BoundaryMaps {
    pub fn phi(&self, s: Sign) -> f64 {
        match s {
            Sign::Plus => self.phi_plus,
            Sign::Minus => self.phi_minus,
        }
    }

    pub fn b(&self, s: Sign) -> BoundaryPoint {
        match s {
            Sign::Plus => self.b_plus,
            Sign::Minus => self.b_minus,
        }
    }
}

fn split(w: MinkowskiVector) -> (f64, BoundaryPoint) {
    let phi = w.0[0];
    (phi, BoundaryPoint { nu: scale3(&w.spatial(), 1.0 / phi) })
}

/// `x ± v = Φ_±(1, B_±)`.
pub fn boundary_maps(p: &UnitTangent) -> BoundaryMaps {
    let (phi_plus, b_plus) = split(p.x + p.v);
    let (phi_minus, b_minus) = split(p.x - p.v);
    BoundaryMaps { phi_minus, phi_plus, b_minus, b_plus }
}

/// `Φ_± = x₀ ± v₀` alone, without normalizing `B_±`.
pub fn phi_pm(p: &UnitTangent, s: Sign) -> f64 {
    p.x.0[0] + s.value() * p.v.0[0]
}

pub fn b_pm(p: &UnitTangent, s: Sign) -> BoundaryPoint {
    split(p.x + p.v * s.value()).1
}

/// `P(x, ν) = ⟨x, (1, ν)⟩_M⁻¹`.
pub fn poisson_kernel(x: &H3Point, nu: &BoundaryPoint) -> f64 {
    1.0 / mink_inner(x.coords(), &nu.lift())
}

/// `v_±(x, ν) = ∓x ± P(x,ν)(1,ν)`, the unit tangent at `x` with `B_± = ν`.
pub fn v_pm(x: &H3Point, nu: &BoundaryPoint, s: Sign) -> MinkowskiVector {
    let p = poisson_kernel(x, nu);
    (nu.lift() * p - *x.coords()) * s.value()
}

/// `γ.(1,ν) = N_γ(ν)(1, L_γ ν)`.
pub fn mobius_action(gamma: &Matrix4<f64>, nu: &BoundaryPoint) -> Result<(BoundaryPoint, f64), BoundaryError> {
    if !is_lorentz(gamma, 1e-10) {
        return Err(BoundaryError::NotLorentz);
    }
    let (n, l) = split(nu.lift().transform(gamma));
    Ok((l, n))
}

pub fn xi_forward(p: &UnitTangent) -> XiCoordinates {
    let m = boundary_maps(p);
    XiCoordinates { nu_minus: m.b_minus, nu_plus: m.b_plus, t: 0.5 * (m.phi_plus / m.phi_minus).ln() }
}

/// Reconstruct `(x, v)` from `Φ_± = 2e^{±t}/|ν₋ − ν₊|` and `x ± v = Φ_±(1, ν_±)`.
pub fn xi_inverse(c: &XiCoordinates) -> Result<UnitTangent, BoundaryError> {
    let sep = norm3(&sub3(&c.nu_minus.nu, &c.nu_plus.nu));
    if sep <= MIN_SEPARATION {
        return Err(BoundaryError::Coincident(sep));
    }
    let pp = 2.0 * c.t.exp() / sep;
    let pm = 2.0 * (-c.t).exp() / sep;
    let a = c.nu_plus.lift() * pp;
    let b = c.nu_minus.lift() * pm;
    Ok(UnitTangent { x: (a + b) * 0.5, v: (a - b) * 0.5 })
}

/// `4(Φ₋Φ₊)⁻²`.
pub fn xi_jacobian(p: &UnitTangent) -> f64 {
    let m = boundary_maps(p);
    4.0 / (m.phi_minus * m.phi_plus).powi(2)
}

/// `dB_±(ξ) = (η' − η₀ B_±)/Φ_±` with `η = ξ_x ± ξ_v`.
pub fn d_b_pm(xi: &SphereTangent, s: Sign) -> [f64; 3] {
    let w = xi.base.x + xi.base.v * s.value();
    let eta = xi.xi_x + xi.xi_v * s.value();
    let phi = w.0[0];
    let b = scale3(&w.spatial(), 1.0 / phi);
    scale3(&sub3(&eta.spatial(), &scale3(&b, eta.0[0])), 1.0 / phi)
}

/// Richardson-extrapolated central difference `(4D(h/2) − D(h))/3`.
pub fn richardson<const N: usize>(f: impl Fn(f64) -> [f64; N], h: f64) -> [f64; N] {
    let d = |h: f64| -> [f64; N] {
        let (a, b) = (f(h), f(-h));
        std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h))
    };
    let (d1, d2) = (d(h), d(0.5 * h));
    std::array::from_fn(|i| (4.0 * d2[i] - d1[i]) / 3.0)
}

/// `|det dΞ|` in a Sasaki-orthonormal frame, by central differences along
/// exact curves in SH³.
pub fn xi_jacobian_fd(p: &UnitTangent, h: f64) -> f64 {
    let frame = FrameQuadruple::from_unit_tangent(p);
    let c0 = xi_forward(p);
    let (am, bm) = complete_frame3(&c0.nu_minus.nu);
    let (ap, bp) = complete_frame3(&c0.nu_plus.nu);
    let basis = standard_basis(p);
    let mut jac = Matrix5::zeros();
    for (col, xi) in basis.iter().enumerate() {
        let curve = tangent_curve(&frame, xi).expect("basis spans");
        let g = |s: f64| {
            let c = xi_forward(&curve(s));
            let dm = sub3(&c.nu_minus.nu, &c0.nu_minus.nu);
            let dp = sub3(&c.nu_plus.nu, &c0.nu_plus.nu);
            [dot3(&dm, &am), dot3(&dm, &bm), dot3(&dp, &ap), dot3(&dp, &bp), c.t - c0.t]
        };
        let d = richardson(g, h);
        for (row, v) in d.iter().enumerate() {
            jac[(row, col)] = *v;
        }
    }
    jac.determinant().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{geodesic_flow, random_lorentz, random_point, random_unit3, random_unit_tangent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_maps() {
        let m = boundary_maps(&UnitTangent::standard());
        assert_eq!((m.phi_minus, m.phi_plus), (1.0, 1.0));
        assert_eq!(m.b_plus.nu, [1.0, 0.0, 0.0]);
        assert_eq!(m.b_minus.nu, [-1.0, 0.0, 0.0]);
        let c = xi_forward(&UnitTangent::standard());
        assert_eq!((c.nu_minus.nu, c.nu_plus.nu, c.t), ([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0));
        assert_eq!(xi_jacobian(&UnitTangent::standard()), 4.0);
    }

    #[test]
    fn product_identity_and_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_unit_tangent(&mut rng, 3.0);
            let m = boundary_maps(&p);
            let d = sub3(&m.b_minus.nu, &m.b_plus.nu);
            assert!((m.phi_minus * m.phi_plus * dot3(&d, &d) - 4.0).abs() < 1e-10);
            for s in [Sign::Plus, Sign::Minus] {
                assert!((poisson_kernel(&p.point(), &m.b(s)) / m.phi(s) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn v_pm_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let o = H3Point::origin();
        let nu = BoundaryPoint::normalized([0.2, -0.4, 0.9]);
        assert!((v_pm(&o, &nu, Sign::Plus) - MinkowskiVector::from_parts(0.0, nu.nu)).max_abs() < 1e-15);
        assert!((v_pm(&o, &nu, Sign::Minus) + MinkowskiVector::from_parts(0.0, nu.nu)).max_abs() < 1e-15);
        for _ in 0..50 {
            let x = random_point(&mut rng, 3.0);
            let nu = BoundaryPoint { nu: random_unit3(&mut rng) };
            for s in [Sign::Plus, Sign::Minus] {
                let v = v_pm(&x, &nu, s);
                let p = UnitTangent::new(*x.coords(), v).unwrap();
                assert!(norm3(&sub3(&b_pm(&p, s).nu, &nu.nu)) < 1e-10);
            }
        }
    }

    #[test]
    fn x_phi_along_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_unit_tangent(&mut rng, 1.0);
        let d = richardson(|t| [phi_pm(&geodesic_flow(&p, t), Sign::Plus), phi_pm(&geodesic_flow(&p, t), Sign::Minus)], 1e-3);
        assert!((d[0] - phi_pm(&p, Sign::Plus)).abs() < 1e-9);
        assert!((d[1] + phi_pm(&p, Sign::Minus)).abs() < 1e-9);
    }

    #[test]
    fn equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let g = random_lorentz(&mut rng, 1.0);
            let p = random_unit_tangent(&mut rng, 2.0);
            for s in [Sign::Plus, Sign::Minus] {
                let (l, _) = mobius_action(&g, &b_pm(&p, s)).unwrap();
                let q = b_pm(&p.transform(&g), s);
                assert!(norm3(&sub3(&l.nu, &q.nu)) < 1e-10);
            }
        }
        let (l, n) = mobius_action(&Matrix4::identity(), &BoundaryPoint::normalized([0.0, 0.6, 0.8])).unwrap();
        assert_eq!((l.nu, n), ([0.0, 0.6, 0.8], 1.0));
        assert!(mobius_action(&(Matrix4::identity() * 2.0), &l).is_err());
    }

    #[test]
    fn inverse_examples() {
        let c = XiCoordinates::new(
            BoundaryPoint::new([-1.0, 0.0, 0.0]).unwrap(),
            BoundaryPoint::new([1.0, 0.0, 0.0]).unwrap(),
            1.0,
        )
        .unwrap();
        let p = xi_inverse(&c).unwrap();
        assert!((p.x.0[0] - 1f64.cosh()).abs() < 1e-15);
        assert!(XiCoordinates::new(c.nu_plus, c.nu_plus, 0.0).is_err());
    }

    #[test]
    fn jacobian_fd_small_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let p = random_unit_tangent(&mut rng, 1.5);
            let a = xi_jacobian(&p);
            let b = xi_jacobian_fd(&p, 1e-4);
            assert!((a - b).abs() < 1e-6 * a, "{a} {b}");
        }
    }
}
