//! Truncated dynamical zeta series `log ζ_k`, Ruelle's factorization, and the
//! multiplicity and Betti-number arithmetic for resonances at zero.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZetaError {
    #[error("records document: {0}")]
    Parse(String),
    #[error("record {index}: primitive length {t} must be positive")]
    BadLength { index: usize, t: f64 },
    #[error("record {index}: det P − 1 = {defect:e}")]
    NotUnimodular { index: usize, defect: f64 },
    #[error("record {index}: eigenvalue within {distance:e} of the unit circle")]
    UnitCircleEigenvalue { index: usize, distance: f64 },
    #[error("degree k = {0} outside 0..=4")]
    BadDegree(usize),
    #[error("series not decaying: last term / partial sum = {0:e}")]
    NonDecaying(f64),
    #[error("multiplicity table violates m1 = m3, m0 = m4: {0:?}")]
    BadTable([i64; 5]),
}

pub const DET_TOL: f64 = 1e-8;
pub const UNIT_CIRCLE_TOL: f64 = 1e-6;
pub const DECAY_TOL: f64 = 1e-12;
pub const DEFAULT_ITERATE_CAP: usize = 20;

fn default_cap() -> usize {
    DEFAULT_ITERATE_CAP
}

/// A primitive closed geodesic: length `T♯`, iterate cap, and linearized Poincaré map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesicRecord {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "P")]
    pub p: [[f64; 4]; 4],
    #[serde(default = "default_cap")]
    pub multiplicity_cap: usize,
}

impl ClosedGeodesicRecord {
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.p[i][j])
    }

    pub fn eigenvalues(&self) -> [Complex64; 4] {
        let e = self.matrix().complex_eigenvalues();
        [e[0], e[1], e[2], e[3]]
    }

    fn validate(&self, index: usize) -> Result<[Complex64; 4], ZetaError> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(ZetaError::BadLength { index, t: self.t });
        }
        let defect = self.matrix().determinant() - 1.0;
        if defect.abs() > DET_TOL {
            return Err(ZetaError::NotUnimodular { index, defect });
        }
        let eigs = self.eigenvalues();
        let distance = eigs.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
        if distance < UNIT_CIRCLE_TOL {
            return Err(ZetaError::UnitCircleEigenvalue { index, distance });
        }
        Ok(eigs)
    }

    /// `max log|μ| / T♯` over eigenvalues `μ` of `P`.
    pub fn expansion_rate(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.norm().ln().abs()).fold(0.0, f64::max) / self.t
    }
}

pub fn parse_records(json: &str) -> Result<Vec<ClosedGeodesicRecord>, ZetaError> {
    let recs: Vec<ClosedGeodesicRecord> = serde_json::from_str(json).map_err(|e| ZetaError::Parse(e.to_string()))?;
    for (i, r) in recs.iter().enumerate() {
        r.validate(i)?;
    }
    Ok(recs)
}

pub fn max_expansion_rate(records: &[ClosedGeodesicRecord]) -> f64 {
    records.iter().map(|r| r.expansion_rate()).fold(0.0, f64::max)
}

/// Elementary symmetric polynomials `e_0..e_4` of four numbers.
pub fn elementary_symmetric(z: &[Complex64; 4]) -> [Complex64; 5] {
    let mut e = [Complex64::new(0.0, 0.0); 5];
    e[0] = Complex64::new(1.0, 0.0);
    for (n, zi) in z.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            e[k] = e[k] + e[k - 1] * zi;
        }
    }
    e
}

/// `tr(∧^k P)` from the eigenvalues of `P`.
pub fn exterior_power_trace(eigs: &[Complex64; 4], k: usize) -> Complex64 {
    elementary_symmetric(eigs)[k]
}

/// `−T♯ tr(∧^k P^n) e^{iλnT♯} / (nT♯ det(I − P^n))` for `n = 1..=cap`.
fn record_terms(eigs: &[Complex64; 4], t: f64, cap: usize, k: usize, lambda: Complex64) -> Vec<Complex64> {
    (1..=cap)
        .map(|n| {
            let pw: [Complex64; 4] = std::array::from_fn(|i| eigs[i].powu(n as u32));
            let e = elementary_symmetric(&pw);
            let det: Complex64 = pw.iter().map(|m| Complex64::new(1.0, 0.0) - m).product();
            let nt = n as f64 * t;
            -(e[k] * (Complex64::i() * lambda * nt).exp()) * t / (det * nt)
        })
        .collect()
}

/// Truncated `log ζ_k(λ)`: the sum over records and iterates `n ≤ cap`.
/// Fails unless every last iterate is below `DECAY_TOL` of the partial sum.
pub fn zeta_k_log_truncated(records: &[ClosedGeodesicRecord], k: usize, lambda: Complex64) -> Result<Complex64, ZetaError> {
    if k > 4 {
        return Err(ZetaError::BadDegree(k));
    }
    let eigs: Vec<[Complex64; 4]> = records.iter().enumerate().map(|(i, r)| r.validate(i)).collect::<Result<_, _>>()?;
    let per: Vec<(Complex64, f64)> = records
        .par_iter()
        .zip(&eigs)
        .map(|(r, e)| {
            let terms = record_terms(e, r.t, r.multiplicity_cap.max(1), k, lambda);
            let last = terms.last().map_or(0.0, |z| z.norm());
            (terms.iter().sum(), last)
        })
        .collect();
    let total: Complex64 = per.iter().map(|p| p.0).sum();
    let last = per.iter().map(|p| p.1).fold(0.0, f64::max);
    if last > 0.0 {
        let ratio = last / total.norm();
        if !(ratio < DECAY_TOL) {
            return Err(ZetaError::NonDecaying(ratio));
        }
    }
    Ok(total)
}

/// `Σ_k (−1)^k log ζ_k(λ)`.
pub fn log_ruelle_graded(records: &[ClosedGeodesicRecord], lambda: Complex64) -> Result<Complex64, ZetaError> {
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..=4 {
        let z = zeta_k_log_truncated(records, k, lambda)?;
        s += if k % 2 == 0 { z } else { -z };
    }
    Ok(s)
}

/// `Σ_γ log(1 − e^{iλT♯})`.
pub fn log_ruelle_product(records: &[ClosedGeodesicRecord], lambda: Complex64) -> Complex64 {
    records.iter().map(|r| (Complex64::new(1.0, 0.0) - (Complex64::i() * lambda * r.t).exp()).ln()).sum()
}

/// Random record with eigenvalues `e^{±(rate·T + iθ)}`, `T ∈ [1, 5]`.
pub fn synthetic_record<R: Rng + ?Sized>(rng: &mut R, rate: f64, cap: usize) -> ClosedGeodesicRecord {
    let t = rng.random_range(1.0..5.0);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let (s, c) = theta.sin_cos();
    let a = (rate * t).exp();
    let mut d = Matrix4::zeros();
    d[(0, 0)] = a * c;
    d[(0, 1)] = -a * s;
    d[(1, 0)] = a * s;
    d[(1, 1)] = a * c;
    d[(2, 2)] = c / a;
    d[(2, 3)] = s / a;
    d[(3, 2)] = -s / a;
    d[(3, 3)] = c / a;
    loop {
        let g = Matrix4::<f64>::from_fn(|i, j| {
            let z: f64 = StandardNormal.sample(rng);
            let id = if i == j { 1.0 } else { 0.0 };
            id + 0.25 * z
        });
        let Some(inv) = g.try_inverse() else { continue };
        if g.norm() * inv.norm() > 20.0 {
            continue;
        }
        let p = g * d * inv;
        return ClosedGeodesicRecord { t, p: std::array::from_fn(|i| std::array::from_fn(|j| p[(i, j)])), multiplicity_cap: cap };
    }
}

pub fn synthetic_spectrum<R: Rng + ?Sized>(rng: &mut R, count: usize, cap: usize) -> Vec<ClosedGeodesicRecord> {
    (0..count).map(|_| synthetic_record(rng, 1.0, cap)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplicityCase {
    Hyperbolic,
    Perturbed,
}

/// Algebraic multiplicities `m_{k,0}(0)`, `k = 0..4`, with `b₁(Σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityTable {
    pub m: [i64; 5],
    pub b1: u64,
}

impl MultiplicityTable {
    pub fn new(m: [i64; 5], b1: u64) -> Result<Self, ZetaError> {
        if m[1] != m[3] || m[0] != m[4] {
            return Err(ZetaError::BadTable(m));
        }
        Ok(Self { m, b1 })
    }

    pub fn for_case(case: MultiplicityCase, b1: u64) -> Self {
        let b = b1 as i64;
        let m = match case {
            MultiplicityCase::Hyperbolic => [1, 2 * b, 2 * b + 2, 2 * b, 1],
            MultiplicityCase::Perturbed => [1, b, b + 2, b, 1],
        };
        Self { m, b1 }
    }
}

/// `m_R(0) = Σ (−1)^k m_{k,0} = 2m₀ − 2m₁ + m₂`.
pub fn ruelle_order(table: &MultiplicityTable) -> i64 {
    let m = &table.m;
    m[0] - m[1] + m[2] - m[3] + m[4]
}

/// `b_k(M)` for the unit sphere bundle of `Σ`, `k = 0..5`.
pub fn betti_table(b1: u64) -> [u64; 6] {
    [1, b1, b1 + 1, b1 + 1, b1, 1]
}
