//! Band-limited functions on S² in the orthonormal complex spherical-harmonic
//! basis (Condon–Shortley phase).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::SphereGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicsError {
    #[error("coefficient index (l={l}, m={m}) outside band limit {l_max}")]
    OutOfBand { l: i64, m: i64, l_max: usize },
    #[error("density is not real-valued (conjugate symmetry defect {0:e})")]
    NotReal(f64),
}

#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Normalized associated Legendre values `P̄_ℓ^m(cos θ)` for `0 ≤ m ≤ ℓ ≤ L`,
/// so that `Y_ℓm = P̄_ℓ^m e^{imφ}`; index `ℓ(ℓ+1)/2 + m`.
pub fn normalized_legendre(l_max: usize, cos_t: f64) -> Vec<f64> {
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        p[idx(m, m)] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t * p[idx(m - 1, m - 1)];
    }
    for m in 0..l_max {
        p[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * cos_t * p[idx(m, m)];
    }
    for m in 0..=l_max {
        for l in m + 2..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(l, m)] = a * (cos_t * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// All `Y_ℓm(ν)` for `ℓ ≤ L`, indexed by [`lm_index`].
pub fn ylm_all(l_max: usize, nu: &[f64; 3]) -> Vec<Complex64> {
    let p = normalized_legendre(l_max, nu[2].clamp(-1.0, 1.0));
    let phi = nu[1].atan2(nu[0]);
    let mut out = vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)];
    for l in 0..=l_max {
        for m in 0..=l {
            let v = Complex64::from_polar(p[l * (l + 1) / 2 + m], m as f64 * phi);
            out[lm_index(l, m as i64)] = v;
            if m > 0 {
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[lm_index(l, -(m as i64))] = v.conj() * s;
            }
        }
    }
    out
}

/// A band-limited function `Σ c_ℓm Y_ℓm` on S².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereFunction {
    l_max: usize,
    coeffs: Vec<Complex64>,
}

pub type BoundaryDensity = SphereFunction;

impl SphereFunction {
    pub fn zero(l_max: usize) -> Self {
        Self { l_max, coeffs: vec![Complex64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)] }
    }

    pub fn constant(c: f64) -> Self {
        let mut f = Self::zero(0);
        f.coeffs[0] = Complex64::new(c * (4.0 * PI).sqrt(), 0.0);
        f
    }

    /// A single normalized harmonic `Y_ℓm`.
    pub fn ylm(l: usize, m: i64) -> Self {
        let mut f = Self::zero(l);
        f.coeffs[lm_index(l, m)] = Complex64::new(1.0, 0.0);
        f
    }

    /// The real harmonic `(Y_ℓm + (−1)^m Y_ℓ,−m)/√2`-type combination for `m ≠ 0`,
    /// or `Y_ℓ0` for `m = 0`.
    pub fn real_ylm(l: usize, m: i64) -> Self {
        let mut f = Self::zero(l);
        if m == 0 {
            f.coeffs[lm_index(l, 0)] = Complex64::new(1.0, 0.0);
        } else {
            let ma = m.abs();
            let s = if ma % 2 == 0 { 1.0 } else { -1.0 };
            let r = std::f64::consts::FRAC_1_SQRT_2;
            if m > 0 {
                f.coeffs[lm_index(l, ma)] = Complex64::new(r * s, 0.0);
                f.coeffs[lm_index(l, -ma)] = Complex64::new(r, 0.0);
            } else {
                f.coeffs[lm_index(l, ma)] = Complex64::new(0.0, -r * s);
                f.coeffs[lm_index(l, -ma)] = Complex64::new(0.0, r);
            }
        }
        f
    }

    pub fn from_entries(l_max: usize, entries: &[(i64, i64, Complex64)]) -> Result<Self, HarmonicsError> {
        let mut f = Self::zero(l_max);
        for &(l, m, c) in entries {
            if l < 0 || l as usize > l_max || m.abs() > l {
                return Err(HarmonicsError::OutOfBand { l, m, l_max });
            }
            f.coeffs[lm_index(l as usize, m)] += c;
        }
        Ok(f)
    }

    /// Random real function with coefficient variance `(1+ℓ)^{-2·decay}`.
    pub fn random_real<R: Rng + ?Sized>(rng: &mut R, l_max: usize, decay: f64) -> Self {
        let mut f = Self::zero(l_max);
        for l in 0..=l_max {
            let s = (1.0 + l as f64).powf(-decay);
            let a: f64 = StandardNormal.sample(rng);
            f.coeffs[lm_index(l, 0)] = Complex64::new(a * s, 0.0);
            for m in 1..=l as i64 {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let c = Complex64::new(re, im) * (s * std::f64::consts::FRAC_1_SQRT_2);
                f.coeffs[lm_index(l, m)] = c;
                let sg = if m % 2 == 0 { 1.0 } else { -1.0 };
                f.coeffs[lm_index(l, -m)] = c.conj() * sg;
            }
        }
        f
    }

    /// Coefficients `∫ f conj(Y_ℓm) dS` by quadrature on `grid`.
    pub fn project(l_max: usize, grid: &SphereGrid, f: impl Fn(&[f64; 3]) -> Complex64) -> Self {
        let mut out = Self::zero(l_max);
        for n in &grid.nodes {
            let v = f(&n.nu) * n.weight;
            for (c, y) in out.coeffs.iter_mut().zip(ylm_all(l_max, &n.nu)) {
                *c += v * y.conj();
            }
        }
        out
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize, m: i64) -> Complex64 {
        if l > self.l_max || m.unsigned_abs() as usize > l {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[lm_index(l, m)]
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn eval(&self, nu: &[f64; 3]) -> Complex64 {
        ylm_all(self.l_max, nu).iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    pub fn eval_real(&self, nu: &[f64; 3]) -> f64 {
        self.eval(nu).re
    }

    /// `max |c_ℓ,−m − (−1)^m conj c_ℓm|`.
    pub fn reality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for l in 0..=self.l_max {
            d = d.max(self.coeff(l, 0).im.abs());
            for m in 1..=l as i64 {
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                d = d.max((self.coeff(l, -m) - self.coeff(l, m).conj() * s).norm());
            }
        }
        d
    }

    pub fn require_real(&self) -> Result<(), HarmonicsError> {
        let d = self.reality_defect();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        if d > 1e-12 * scale {
            return Err(HarmonicsError::NotReal(d));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { l_max: self.l_max, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiply each degree-ℓ block by `mult(ℓ)`.
    pub fn map_degrees(&self, mult: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            let w = mult(l);
            for m in -(l as i64)..=l as i64 {
                out.coeffs[lm_index(l, m)] *= w;
            }
        }
        out
    }

    /// `⟨f, h⟩ = Σ c_f conj(c_h)`.
    pub fn inner(&self, o: &Self) -> Complex64 {
        self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a * b.conj()).sum()
    }
}

/// Allocation-free evaluator for a real band-limited function.
///
/// Uses `P̄_ℓ^m(cos θ) e^{imφ} = Q_ℓ^m(z) (x + iy)^m` with polynomial `Q_ℓ^m`,
/// which avoids trigonometric calls and is regular at the poles.
#[derive(Clone, Debug)]
pub struct RealEvaluator {
    l_max: usize,
    // per m: diagonal start Q_m^m, then per ℓ > m: (a, b, re, im) with re/im already doubled for m > 0
    diag: Vec<f64>,
    rows: Vec<Vec<[f64; 4]>>,
    lead: Vec<[f64; 2]>,
}

impl RealEvaluator {
    pub fn new(f: &SphereFunction) -> Result<Self, HarmonicsError> {
        f.require_real()?;
        let l_max = f.l_max;
        let mut diag = vec![1.0 / (4.0 * PI).sqrt(); l_max + 1];
        for m in 1..=l_max {
            diag[m] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * diag[m - 1];
        }
        let mut rows = Vec::with_capacity(l_max + 1);
        let mut lead = Vec::with_capacity(l_max + 1);
        for m in 0..=l_max {
            let w = if m == 0 { 1.0 } else { 2.0 };
            let c = f.coeff(m, m as i64);
            lead.push([w * c.re, -w * c.im]);
            let mut r = Vec::new();
            for l in m + 1..=l_max {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = if l == m + 1 {
                    0.0
                } else {
                    (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt()
                };
                let c = f.coeff(l, m as i64);
                r.push([a, b, w * c.re, -w * c.im]);
            }
            rows.push(r);
        }
        Ok(Self { l_max, diag, rows, lead })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    #[inline]
    pub fn eval(&self, nu: &[f64; 3]) -> f64 {
        let z = nu[2];
        let (mut wr, mut wi) = (1.0, 0.0);
        let mut total = 0.0;
        for m in 0..=self.l_max {
            if m > 0 {
                let t = wr * nu[0] - wi * nu[1];
                wi = wr * nu[1] + wi * nu[0];
                wr = t;
            }
            let q0 = self.diag[m];
            let [cr, ci] = self.lead[m];
            let mut acc_r = cr * q0;
            let mut acc_i = ci * q0;
            let (mut qm2, mut qm1) = (0.0, q0);
            for &[a, b, cr, ci] in &self.rows[m] {
                let q = a * (z * qm1 - b * qm2);
                acc_r += cr * q;
                acc_i += ci * q;
                qm2 = qm1;
                qm1 = q;
            }
            total += acc_r * wr + acc_i * wi;
        }
        total
    }
}

impl Density for RealEvaluator {
    fn value(&self, nu: &[f64; 3]) -> f64 {
        self.eval(nu)
    }
}

/// Pointwise real-valued boundary data.
pub trait Density: Sync {
    fn value(&self, nu: &[f64; 3]) -> f64;
}

impl Density for SphereFunction {
    fn value(&self, nu: &[f64; 3]) -> f64 {
        self.eval_real(nu)
    }
}

impl<F: Fn(&[f64; 3]) -> f64 + Sync> Density for F {
    fn value(&self, nu: &[f64; 3]) -> f64 {
        self(nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn low_degree_closed_forms() {
        let nu = [0.36, 0.48, 0.8];
        let y = ylm_all(2, &nu);
        let c0 = 1.0 / (4.0 * PI).sqrt();
        assert!((y[0].re - c0).abs() < 1e-15);
        assert!((y[lm_index(1, 0)].re - (3.0 / (4.0 * PI)).sqrt() * 0.8).abs() < 1e-15);
        let y11 = -(3.0 / (8.0 * PI)).sqrt() * Complex64::new(0.36, 0.48);
        assert!((y[lm_index(1, 1)] - y11).norm() < 1e-15);
        let y20 = (5.0 / (16.0 * PI)).sqrt() * (3.0 * 0.64 - 1.0);
        assert!((y[lm_index(2, 0)].re - y20).abs() < 1e-15);
    }

    #[test]
    fn orthonormality_on_grid() {
        let l = 6;
        let grid = SphereGrid::new(l + 1, 2 * l + 1);
        for (a, b) in [((3, 2), (3, 2)), ((3, 2), (4, 2)), ((5, -1), (5, -1)), ((2, 1), (2, -1))] {
            let q: Complex64 = grid
                .nodes
                .iter()
                .map(|n| {
                    let y = ylm_all(l, &n.nu);
                    y[lm_index(a.0, a.1)] * y[lm_index(b.0, b.1)].conj() * n.weight
                })
                .sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((q - expect).norm() < 1e-13, "{a:?} {b:?} {q}");
        }
    }

    #[test]
    fn parseval_and_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = SphereFunction::random_real(&mut rng, 8, 0.5);
        assert!(f.require_real().is_ok());
        let grid = SphereGrid::new(9, 17);
        let q = grid.integrate(|n| f.eval(&n.nu).norm_sqr());
        assert!((q - f.norm_sq()).abs() < 1e-8 * f.norm_sq());
        let g = SphereFunction::project(8, &grid, |nu| f.eval(nu));
        for (a, b) in g.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        for n in &grid.nodes {
            assert!(f.eval(&n.nu).im.abs() < 1e-12);
        }
    }

    #[test]
    fn real_evaluator_matches_complex_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = SphereFunction::random_real(&mut rng, 9, 0.0);
        let e = RealEvaluator::new(&f).unwrap();
        let grid = SphereGrid::new(7, 11);
        for n in grid.nodes.iter().chain(std::iter::once(&grid.nodes[0])) {
            assert!((e.eval(&n.nu) - f.eval_real(&n.nu)).abs() < 1e-12);
        }
        for nu in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]] {
            assert!((e.eval(&nu) - f.eval_real(&nu)).abs() < 1e-12);
        }
        assert!(RealEvaluator::new(&SphereFunction::ylm(2, 1)).is_err());
    }

    #[test]
    fn real_harmonics_are_real() {
        for m in -3..=3 {
            let f = SphereFunction::real_ylm(3, m);
            assert!(f.require_real().is_ok(), "{m}");
            assert!((f.norm_sq() - 1.0).abs() < 1e-15);
        }
        assert!((SphereFunction::constant(2.0).eval_real(&[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
    }
}
