//! Zonal convolution operators `A_κ f(ν) = ∫ κ(|ν−ν'|²) f(ν') dS(ν')` on S²,
//! their Funk–Hecke spectra, Sobolev operator norms, and the regularizing
//! kernels `κ_ε`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::chi_derivatives;
use crate::harmonics::{ylm_all, SphereFunction};
use crate::quadrature::{dot3, Rule1d, SphereGrid};

/// Sphere quadrature used for pointwise zonal integrals.
pub type QuadratureGrid = SphereGrid;

/// Default band-limit cap for operator norms.
pub const DEFAULT_BAND_LIMIT: usize = 64;

/// A kernel profile `κ` on `[0, 4]`, `r = |ν − ν'|²`.
pub trait ZonalKernel: Sync {
    /// `∂_r^order κ(r)`. Orders above [`ZonalKernel::max_order`] return NaN.
    fn deriv(&self, r: f64, order: usize) -> f64;

    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// Points of `(0, 4)` where the profile changes scale; used to place
    /// quadrature panels.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Degree when the profile is a polynomial in `r`.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }

    fn eval(&self, r: f64) -> f64 {
        self.deriv(r, 0)
    }

    fn d1(&self, r: f64) -> f64 {
        self.deriv(r, 1)
    }

    fn d2(&self, r: f64) -> f64 {
        self.deriv(r, 2)
    }
}

impl<K: ZonalKernel + ?Sized> ZonalKernel for &K {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        (**self).deriv(r, order)
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn polynomial_degree(&self) -> Option<usize> {
        (**self).polynomial_degree()
    }
}

impl<K: ZonalKernel + ?Sized> ZonalKernel for Box<K> {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        (**self).deriv(r, order)
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn polynomial_degree(&self) -> Option<usize> {
        (**self).polynomial_degree()
    }
}

/// `κ(r) = Σ c_k r^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyKernel {
    pub coeffs: Vec<f64>,
}

impl PolyKernel {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// Standard normal coefficients scaled by `4^{-k}` so every term is O(1) on `[0, 4]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, degree: usize) -> Self {
        Self::new(
            (0..=degree)
                .map(|k| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * 0.25f64.powi(k as i32)
                })
                .collect(),
        )
    }
}

impl ZonalKernel for PolyKernel {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().skip(order).rev() {
            let ff: f64 = (k + 1 - order..=k).map(|i| i as f64).product();
            acc = acc * r + c * ff;
        }
        acc
    }

    fn polynomial_degree(&self) -> Option<usize> {
        Some(self.coeffs.len().saturating_sub(1))
    }
}

/// `κ(r) = a·exp(−b (r − c)²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl GaussianKernel {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        Self { amplitude: z, width: rng.random_range(0.2..8.0), center: rng.random_range(0.0..4.0) }
    }
}

impl ZonalKernel for GaussianKernel {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        // ∂^n e^{−b x²} = (−√b)^n H_n(√b x) e^{−b x²} with physicists' Hermite H_n.
        let sb = self.width.sqrt();
        let y = sb * (r - self.center);
        let (mut h0, mut h1) = (1.0, 2.0 * y);
        let h = match order {
            0 => h0,
            _ => {
                for n in 1..order {
                    let h2 = 2.0 * y * h1 - 2.0 * n as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1
            }
        };
        self.amplitude * (-sb).powi(order as i32) * h * (-y * y).exp()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let w = 1.0 / self.width.sqrt();
        [self.center - w, self.center, self.center + w]
            .into_iter()
            .filter(|r| *r > 0.0 && *r < 4.0)
            .collect()
    }
}

/// A mix of random polynomial and Gaussian profiles used in sampling studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleKernel {
    Poly(PolyKernel),
    Gaussian(GaussianKernel),
}

impl SampleKernel {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            let d = rng.random_range(0..=6);
            Self::Poly(PolyKernel::random(rng, d))
        } else {
            Self::Gaussian(GaussianKernel::random(rng))
        }
    }
}

impl ZonalKernel for SampleKernel {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        match self {
            Self::Poly(k) => k.deriv(r, order),
            Self::Gaussian(k) => k.deriv(r, order),
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Poly(k) => k.breakpoints(),
            Self::Gaussian(k) => k.breakpoints(),
        }
    }
    fn polynomial_degree(&self) -> Option<usize> {
        match self {
            Self::Poly(k) => k.polynomial_degree(),
            Self::Gaussian(_) => None,
        }
    }
}

type Profile = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A kernel from explicit `κ, κ', κ''` callables.
pub struct FnKernel {
    pub eval: Profile,
    pub d1: Profile,
    pub d2: Profile,
}

impl FnKernel {
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Box::new(eval), d1: Box::new(d1), d2: Box::new(d2) }
    }
}

impl ZonalKernel for FnKernel {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        match order {
            0 => (self.eval)(r),
            1 => (self.d1)(r),
            2 => (self.d2)(r),
            _ => f64::NAN,
        }
    }
    fn max_order(&self) -> usize {
        2
    }
}

/// Max deviation of `d1, d2` from central differences of `eval` on `r ∈ [h, 4−h]`,
/// scaled by `1 + |derivative|`.
pub fn derivative_consistency<K: ZonalKernel + ?Sized>(k: &K, samples: usize, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let r = 2.0 * h + (4.0 - 4.0 * h) * i as f64 / (samples.max(2) - 1) as f64;
        let (fp, f0, fm) = (k.eval(r + h), k.eval(r), k.eval(r - h));
        let e1 = ((fp - fm) / (2.0 * h) - k.d1(r)).abs() / (1.0 + k.d1(r).abs());
        let e2 = ((fp - 2.0 * f0 + fm) / (h * h) - k.d2(r)).abs() / (1.0 + k.d2(r).abs());
        worst = worst.max(e1).max(e2);
    }
    worst
}

/// `κ̃(r) = (4−r) r κ''(r) + (4−2r) κ'(r)`, so that `Δ_{S²} A_κ = A_κ̃`.
#[derive(Clone, Copy, Debug)]
pub struct KappaTilde<K> {
    pub inner: K,
}

pub fn kappa_tilde<K: ZonalKernel>(k: K) -> KappaTilde<K> {
    KappaTilde { inner: k }
}

impl<K: ZonalKernel> ZonalKernel for KappaTilde<K> {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        if order > self.max_order() {
            return f64::NAN;
        }
        let j = order as f64;
        let k = |n| self.inner.deriv(r, n);
        (4.0 * r - r * r) * k(order + 2) + j * (4.0 - 2.0 * r) * k(order + 1)
            - j * (j - 1.0) * k(order)
            + (4.0 - 2.0 * r) * k(order + 1)
            - 2.0 * j * k(order)
    }
    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(2)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }
    fn polynomial_degree(&self) -> Option<usize> {
        self.inner.polynomial_degree()
    }
}

/// Eigenvalues `λ_ℓ` of `A_κ` on degree-ℓ spherical harmonics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunkHeckeSpectrum {
    pub lambdas: Vec<f64>,
}

impl FunkHeckeSpectrum {
    pub fn l_max(&self) -> usize {
        self.lambdas.len().saturating_sub(1)
    }

    /// `A_κ f` computed on coefficients.
    pub fn apply(&self, f: &SphereFunction) -> SphereFunction {
        f.map_degrees(|l| self.lambdas.get(l).copied().unwrap_or(0.0))
    }

    /// `max_ℓ (1+ℓ(ℓ+1))^{(s₂−s₁)/2} |λ_ℓ|` with the maximizing degree.
    pub fn sobolev_norm(&self, s1: f64, s2: f64) -> (f64, usize) {
        let p = 0.5 * (s2 - s1);
        let mut best = (0.0, 0);
        for (l, &lam) in self.lambdas.iter().enumerate() {
            let lf = l as f64;
            let v = (1.0 + lf * (lf + 1.0)).powf(p) * lam.abs();
            if v > best.0 {
                best = (v, l);
            }
        }
        best
    }

    /// `max_ℓ |λ_ℓ| − bound` (nonpositive when the Schur estimate holds).
    pub fn schur_defect(&self, bound: f64) -> f64 {
        self.lambdas.iter().map(|l| l.abs() - bound).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn theta_of_r(r: f64) -> f64 {
    2.0 * (0.5 * r.clamp(0.0, 4.0).sqrt()).asin()
}

fn refine(breaks: &mut Vec<f64>, max_width: f64) {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let m = (((w[1] - w[0]) / max_width).ceil() as usize).max(1);
        for i in 1..=m {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / m as f64);
        }
    }
    *breaks = out;
}

/// Panels in `θ ∈ [0, π]` resolving both the kernel's breakpoints and degree `l_max`.
fn theta_rule<K: ZonalKernel + ?Sized>(k: &K, l_max: usize) -> Rule1d {
    let mut breaks: Vec<f64> = vec![0.0, PI];
    breaks.extend(k.breakpoints().into_iter().filter(|r| *r > 0.0 && *r < 4.0).map(theta_of_r));
    refine(&mut breaks, (16.0 / (l_max as f64 + 1.0)).min(0.25));
    Rule1d::composite(&breaks, 24)
}

/// `λ_ℓ = 2π ∫_{−1}^{1} κ(2−2t) P_ℓ(t) dt` for `ℓ ≤ L`, integrated in `t = cos θ`.
pub fn funk_hecke_spectrum<K: ZonalKernel + ?Sized>(k: &K, l_max: usize) -> FunkHeckeSpectrum {
    let rule = theta_rule(k, l_max);
    let pts: Vec<(f64, f64)> = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&th, &w)| {
            let (s, c) = th.sin_cos();
            let half = (0.5 * th).sin();
            (c, 2.0 * PI * w * s * k.eval(4.0 * half * half))
        })
        .collect();
    const CHUNK: usize = 256;
    let partials: Vec<Vec<f64>> = pts
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; l_max + 1];
            for &(t, wk) in chunk {
                let (mut p0, mut p1) = (1.0, t);
                acc[0] += wk * p0;
                if l_max >= 1 {
                    acc[1] += wk * p1;
                }
                for (l, a) in acc.iter_mut().enumerate().skip(2) {
                    let lf = l as f64;
                    let p2 = ((2.0 * lf - 1.0) * t * p1 - (lf - 1.0) * p0) / lf;
                    p0 = p1;
                    p1 = p2;
                    *a += wk * p2;
                }
            }
            acc
        })
        .collect();
    let mut lambdas = vec![0.0; l_max + 1];
    for p in &partials {
        for (a, b) in lambdas.iter_mut().zip(p) {
            *a += b;
        }
    }
    FunkHeckeSpectrum { lambdas }
}

/// Bisection root of `f` on `[a, b]` given a sign change.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// `∫_a^b |f|` with panels split at detected sign changes of `f`.
pub fn abs_integral(f: impl Fn(f64) -> f64 + Sync, breaks: &[f64]) -> f64 {
    let mut b = breaks.to_vec();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b.par_windows(2)
        .map(|w| {
            const SAMPLES: usize = 32;
            let (lo, hi) = (w[0], w[1]);
            let mut cuts = vec![lo];
            let mut prev = (lo, f(lo));
            for i in 1..=SAMPLES {
                let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
                let fx = f(x);
                if prev.1 != 0.0 && fx != 0.0 && (prev.1 < 0.0) != (fx < 0.0) {
                    cuts.push(bisect(&f, prev.0, x));
                }
                prev = (x, fx);
            }
            cuts.push(hi);
            Rule1d::composite(&cuts, 20).integrate(|x| f(x).abs())
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn r_breaks<K: ZonalKernel + ?Sized>(k: &K) -> Vec<f64> {
    let mut b: Vec<f64> = (0..=64).map(|i| i as f64 / 16.0).collect();
    b.extend(k.breakpoints().into_iter().filter(|r| *r > 0.0 && *r < 4.0));
    b
}

/// `‖r^k ∂_r^j κ‖_{L¹([0,4])}`.
pub fn weighted_l1<K: ZonalKernel + ?Sized>(kernel: &K, j: usize, k: usize) -> f64 {
    abs_integral(|r| r.powi(k as i32) * kernel.deriv(r, j), &r_breaks(kernel))
}

/// `π ‖κ‖_{L¹([0,4])}`, the Schur bound for the L² operator norm.
pub fn schur_bound<K: ZonalKernel + ?Sized>(kernel: &K) -> f64 {
    PI * weighted_l1(kernel, 0, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorms {
    pub s1: f64,
    pub s2: f64,
    pub band_limit: usize,
    /// `sup_{ℓ ≤ L} (1+ℓ(ℓ+1))^{(s₂−s₁)/2} |λ_ℓ|`.
    pub norm: f64,
    pub argmax_l: usize,
    pub schur_bound: f64,
    /// `Σ_{j ≤ 2m} ‖r^{max(j−m,0)} ∂^j κ‖_{L¹}` with `m = (s₂−s₁)/2`; present
    /// only when `m` is a nonnegative integer within the kernel's derivative range.
    pub sobolev_bound_rhs: Option<f64>,
}

pub fn sobolev_bound_rhs<K: ZonalKernel + ?Sized>(kernel: &K, m: usize) -> Option<f64> {
    if 2 * m > kernel.max_order() {
        return None;
    }
    Some((0..=2 * m).map(|j| weighted_l1(kernel, j, j.saturating_sub(m))).sum())
}

pub fn operator_norms<K: ZonalKernel + ?Sized>(kernel: &K, s1: f64, s2: f64, l_max: usize) -> OperatorNorms {
    let spec = funk_hecke_spectrum(kernel, l_max);
    let (norm, argmax_l) = spec.sobolev_norm(s1, s2);
    let half = 0.5 * (s2 - s1);
    let m = half.round();
    let rhs = if half >= 0.0 && (half - m).abs() < 1e-12 { sobolev_bound_rhs(kernel, m as usize) } else { None };
    OperatorNorms { s1, s2, band_limit: l_max, norm, argmax_l, schur_bound: schur_bound(kernel), sobolev_bound_rhs: rhs }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereConvError {
    #[error("sphere grid integrates degree {available} exactly, {required} needed")]
    UnderResolved { required: usize, available: usize },
}

/// `A_κ f` by pointwise quadrature on `grid`, projected back to degree `L` of `f`.
pub fn a_kappa_apply<K: ZonalKernel + ?Sized>(
    kernel: &K,
    f: &SphereFunction,
    grid: &QuadratureGrid,
) -> Result<SphereFunction, SphereConvError> {
    let l = f.l_max();
    let available = 2 * grid.exact_degree();
    let required = match kernel.polynomial_degree() {
        Some(d) => (d + l).max(2 * l),
        None => 2 * l,
    };
    if available < required {
        return Err(SphereConvError::UnderResolved { required, available });
    }
    let fv: Vec<Complex64> = grid.nodes.par_iter().map(|n| f.eval(&n.nu)).collect();
    let out: Vec<Complex64> = grid
        .nodes
        .par_iter()
        .map(|n| {
            grid.nodes
                .iter()
                .zip(&fv)
                .map(|(m, v)| v * (m.weight * kernel.eval((2.0 - 2.0 * dot3(&n.nu, &m.nu)).max(0.0))))
                .sum()
        })
        .collect();
    let mut g = SphereFunction::zero(l);
    for (n, v) in grid.nodes.iter().zip(&out) {
        for (c, y) in g.coeffs_mut().iter_mut().zip(ylm_all(l, &n.nu)) {
            *c += v * n.weight * y.conj();
        }
    }
    Ok(g)
}

/// Signed Stirling numbers of the first kind `s(n, k)`, `0 ≤ k ≤ n ≤ N`.
fn stirling1(n_max: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n_max + 1]; n_max + 1];
    s[0][0] = 1.0;
    for n in 0..n_max {
        for k in 1..=n + 1 {
            s[n + 1][k] = s[n][k - 1] - n as f64 * s[n][k];
        }
    }
    s
}

/// Coefficients `c_p` with `(2 − ½ s∂_s)^j G = Σ_p c_p s^p G^{(p)}`.
fn g_coefficients(j: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..j {
        let mut n = vec![0.0; c.len() + 1];
        for (p, &cp) in c.iter().enumerate() {
            n[p] += (2.0 - 0.5 * p as f64) * cp;
            n[p + 1] -= 0.5 * cp;
        }
        c = n;
    }
    c
}

/// `∫_T^∞ cosh⁻⁴ t dt = (1−y)²(2+y)/3`, `y = tanh T`.
fn sech4_tail(t: f64) -> f64 {
    let one_minus_y = 2.0 / ((2.0 * t).exp() + 1.0);
    let y = 1.0 - one_minus_y;
    one_minus_y * one_minus_y * (2.0 + y) / 3.0
}

fn chi_derivs_dyn(u: f64, n: usize) -> Vec<f64> {
    macro_rules! dispatch {
        ($($k:literal),*) => {
            match n {
                $($k => chi_derivatives::<$k>(u).to_vec(),)*
                _ => panic!("cutoff derivative order {} unsupported", n - 1),
            }
        };
    }
    dispatch!(1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11)
}

/// Highest derivative order of `κ_ε` supported.
pub const KAPPA_EPS_MAX_ORDER: usize = 6;

/// Transition panels for the `t` integral at derivative order 0; four more per order.
const TRANSITION_PANELS: usize = 12;
const TRANSITION_NODES: usize = 20;

/// `Φ_{G_q}(τ) = ∫_ℝ G_q(2cosh t/√τ) cosh⁻⁴ t dt` for `q = 0..=q_max`,
/// `G_0 = 1 − χ`, `G_q = (2 − ½ s∂_s)^q G_0`.
fn phi_family(tau: f64, q_max: usize) -> Vec<f64> {
    phi_family_with(tau, q_max, TRANSITION_PANELS + 4 * q_max)
}

fn phi_family_with(tau: f64, q_max: usize, panels: usize) -> Vec<f64> {
    let coeffs: Vec<Vec<f64>> = (0..=q_max).map(g_coefficients).collect();
    let sq = tau.sqrt();
    if sq <= 1.0 {
        return coeffs.iter().map(|c| c[0] * 4.0 / 3.0).collect();
    }
    let ta = (0.5 * sq).max(1.0).acosh();
    let tb = sq.acosh();
    let mut out: Vec<f64> = coeffs.iter().map(|c| c[0] * 2.0 * sech4_tail(tb)).collect();
    let breaks: Vec<f64> =
        (0..=panels).map(|i| ta + (tb - ta) * i as f64 / panels as f64).collect();
    let rule = Rule1d::composite(&breaks, TRANSITION_NODES);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let u = 2.0 * t.cosh() / sq;
        let ch = 1.0 / t.cosh();
        let wt = 2.0 * w * ch.powi(4);
        let d = chi_derivs_dyn(u, q_max + 1);
        // u^p G_0^{(p)}(u)
        let mut basis = Vec::with_capacity(q_max + 1);
        let mut up = 1.0;
        for (p, dp) in d.iter().enumerate() {
            let g = if p == 0 { 1.0 - dp } else { -dp };
            basis.push(up * g);
            up *= u;
        }
        for (o, c) in out.iter_mut().zip(&coeffs) {
            *o += wt * c.iter().zip(&basis).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

/// `1 − ψ_ε(r) = (3/4) ∫ (1 − χ(2ε cosh t/√r)) cosh⁻⁴ t dt`, computed directly
/// so that small values keep full relative precision.
pub fn one_minus_psi_eps(eps: f64, r: f64) -> f64 {
    if r <= eps * eps {
        return 1.0;
    }
    0.75 * phi_family(r / (eps * eps), 0)[0]
}

/// `ψ_ε(r) = (3/4) ∫_ℝ χ(2ε cosh t/√r) cosh⁻⁴ t dt`.
pub fn psi_eps(eps: f64, r: f64) -> f64 {
    1.0 - one_minus_psi_eps(eps, r)
}

/// `κ_ε(r) = (4/3) r² (1 − ψ_ε(r))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEps {
    pub eps: f64,
}

pub fn kappa_eps(eps: f64) -> KappaEps {
    KappaEps { eps }
}

impl KappaEps {
    /// `(r∂_r)^q κ_ε(r)` for `q = 0..=q_max`.
    pub fn euler_derivatives(&self, r: f64, q_max: usize) -> Vec<f64> {
        let e2 = self.eps * self.eps;
        if r <= e2 {
            return (0..=q_max).map(|q| (4.0 / 3.0) * r * r * 2f64.powi(q as i32)).collect();
        }
        phi_family(r / e2, q_max).into_iter().map(|p| r * r * p).collect()
    }

    /// `‖r^k ∂_r^j κ_ε‖_{L¹([0,4])}`.
    pub fn l1_profile(&self, j: usize, k: usize) -> f64 {
        weighted_l1(self, j, k)
    }
}

impl ZonalKernel for KappaEps {
    fn deriv(&self, r: f64, order: usize) -> f64 {
        if order > KAPPA_EPS_MAX_ORDER {
            return f64::NAN;
        }
        if r <= self.eps * self.eps {
            return match order {
                0 => (4.0 / 3.0) * r * r,
                1 => (8.0 / 3.0) * r,
                2 => 8.0 / 3.0,
                _ => 0.0,
            };
        }
        let e = self.euler_derivatives(r, order);
        let s = stirling1(order);
        let rj: f64 = e.iter().zip(&s[order]).map(|(a, b)| a * b).sum();
        rj / r.powi(order as i32)
    }

    fn max_order(&self) -> usize {
        KAPPA_EPS_MAX_ORDER
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut r = self.eps * self.eps;
        let mut v = Vec::new();
        while r < 4.0 {
            v.push(r);
            r *= 2.0;
        }
        v
    }
}

/// How many degrees enter the band-limited norm at a given ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandCap {
    Fixed(usize),
    /// `max(base, ⌈base/ε⌉)`, enough to contain the maximizing degree `ℓ ~ 1/ε`.
    Scaled(usize),
}

impl BandCap {
    pub fn at(&self, eps: f64) -> usize {
        match *self {
            Self::Fixed(l) => l,
            Self::Scaled(b) => b.max((b as f64 / eps).ceil() as usize),
        }
    }
}

impl Default for BandCap {
    fn default() -> Self {
        Self::Scaled(DEFAULT_BAND_LIMIT)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub eps: f64,
    pub band_limit: usize,
    /// Band-limited `H^{−5/2} → H^{5/2}` norm of `A_{κ_ε}`.
    pub norm: f64,
    pub argmax_l: usize,
    /// The same norm with the band limit doubled.
    pub norm_doubled_band: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub cap: BandCap,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log norm` against `log ε`.
    pub slope: f64,
    pub strictly_decreasing: bool,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `ε ↦ ‖A_{κ_ε}‖_{H^{−5/2}→H^{5/2}}` on the band-limited sector.
pub fn regularization_norm_decay(eps_list: &[f64], cap: BandCap) -> DecayTable {
    let rows: Vec<DecayRow> = eps_list
        .iter()
        .map(|&eps| {
            let k = kappa_eps(eps);
            let l = cap.at(eps);
            let spec = funk_hecke_spectrum(&k, 2 * l);
            let (norm, argmax_l) = FunkHeckeSpectrum { lambdas: spec.lambdas[..=l].to_vec() }.sobolev_norm(-2.5, 2.5);
            let (norm_doubled_band, _) = spec.sobolev_norm(-2.5, 2.5);
            DecayRow { eps, band_limit: l, norm, argmax_l, norm_doubled_band }
        })
        .collect();
    let mut sorted: Vec<&DecayRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let strictly_decreasing = sorted.windows(2).all(|w| w[1].norm < w[0].norm);
    let slope = log_log_slope(
        &rows.iter().map(|r| r.eps).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.norm).collect::<Vec<_>>(),
    );
    DecayTable { cap, rows, slope, strictly_decreasing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poly_and_gaussian_derivatives() {
        let p = PolyKernel::new(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(p.deriv(2.0, 0), 1.0 - 4.0 + 2.0 + 24.0);
        assert_eq!(p.deriv(2.0, 1), -2.0 + 2.0 + 36.0);
        assert_eq!(p.deriv(2.0, 3), 18.0);
        assert_eq!(p.deriv(2.0, 4), 0.0);
        let g = GaussianKernel { amplitude: 1.3, width: 2.0, center: 1.5 };
        assert!(derivative_consistency(&g, 50, 1e-4) < 1e-6);
        let h = 1e-4;
        for r in [0.3, 1.4, 3.1] {
            let fd = (g.deriv(r + h, 2) - g.deriv(r - h, 2)) / (2.0 * h);
            assert!((g.deriv(r, 3) - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn kappa_tilde_examples() {
        let t = kappa_tilde(PolyKernel::new(vec![0.0, 1.0]));
        for r in [0.0, 1.0, 2.5] {
            assert!((t.eval(r) - (4.0 - 2.0 * r)).abs() < 1e-14);
        }
        let t2 = kappa_tilde(PolyKernel::new(vec![0.0, 0.0, 1.0]));
        for r in [0.5, 3.0] {
            assert!((t2.eval(r) - (16.0 * r - 6.0 * r * r)).abs() < 1e-12);
            assert!((t2.d1(r) - (16.0 - 12.0 * r)).abs() < 1e-12);
        }
        assert_eq!(kappa_tilde(PolyKernel::constant(3.0)).eval(1.2), 0.0);
    }

    #[test]
    fn constant_kernel_spectrum() {
        let s = funk_hecke_spectrum(&PolyKernel::constant(1.0), 10);
        assert!((s.lambdas[0] - 4.0 * PI).abs() < 1e-12);
        assert!(s.lambdas[1..].iter().all(|l| l.abs() < 1e-12));
    }

    #[test]
    fn quadratic_spectrum() {
        // (1−t)² = (4/3)P₀ − 2P₁ + (2/3)P₂ and r = 2(1−t)
        let k = PolyKernel::new(vec![0.0, 0.0, 0.25]);
        let s = funk_hecke_spectrum(&k, 4);
        let want = [16.0 * PI / 3.0, -8.0 * PI / 3.0, 8.0 * PI / 15.0, 0.0, 0.0];
        for (a, b) in s.lambdas.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn stirling_and_g_coefficients() {
        let s = stirling1(4);
        assert_eq!(s[3], vec![0.0, 2.0, -3.0, 1.0, 0.0]);
        assert_eq!(s[4][1..], [-6.0, 11.0, -6.0, 1.0]);
        assert_eq!(g_coefficients(1), vec![2.0, -0.5]);
        assert_eq!(g_coefficients(2), vec![4.0, -1.75, 0.25]);
    }

    #[test]
    fn psi_eps_limits() {
        let eps = 0.1;
        assert_eq!(psi_eps(eps, 0.005), 0.0);
        assert_eq!(psi_eps(eps, eps * eps), 0.0);
        let mut prev = 0.0;
        for k in 1..10 {
            let p = psi_eps(0.5f64.powi(k), 1.0);
            assert!((0.0..=1.0).contains(&p) && p >= prev);
            prev = p;
        }
        assert!(1.0 - prev < 1e-9);
    }

    #[test]
    fn psi_eps_matches_direct_quadrature() {
        for (eps, r) in [(0.3f64, 0.2f64), (0.1, 0.05), (0.05, 2.0), (0.5, 3.9)] {
            let tmax = r.sqrt() / eps;
            let rule = Rule1d::composite(&crate::quadrature::uniform_breaks(0.0, tmax.acosh(), 0.02), 20);
            let direct = 1.5 * rule.integrate(|t| crate::cutoff::chi(2.0 * eps * t.cosh() / r.sqrt()) / t.cosh().powi(4));
            assert!((psi_eps(eps, r) - direct).abs() < 1e-12, "{eps} {r}");
        }
    }

    #[test]
    fn kappa_eps_derivatives_match_differences() {
        let k = kappa_eps(0.25);
        let h = 1e-5;
        for r in [0.01, 0.07, 0.2, 0.6, 2.0, 3.7] {
            for j in 0..4 {
                let fd = (k.deriv(r + h, j) - k.deriv(r - h, j)) / (2.0 * h);
                let d = k.deriv(r, j + 1);
                assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "r={r} j={j} {d} {fd}");
            }
        }
        assert_eq!(k.eval(0.05), (4.0 / 3.0) * 0.05 * 0.05);
    }

    #[test]
    fn schur_bound_holds_for_sample_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let k = SampleKernel::random(&mut rng);
            let spec = funk_hecke_spectrum(&k, 32);
            assert!(spec.schur_defect(schur_bound(&k)) <= 1e-12);
        }
    }

    #[test]
    fn transition_quadrature_converged() {
        for tau in [1.5, 3.2, 4.5, 30.0, 1e4] {
            let a = phi_family(tau, 6);
            let b = phi_family_with(tau, 6, 96);
            for (q, (x, y)) in a.iter().zip(&b).enumerate() {
                let tol = if q <= 4 { 1e-11 } else { 1e-9 };
                assert!((x - y).abs() < tol * (1.0 + y.abs()), "{tau} {q} {x} {y}");
            }
        }
    }

    #[test]
    fn band_cap() {
        assert_eq!(BandCap::Fixed(64).at(0.01), 64);
        assert_eq!(BandCap::Scaled(64).at(0.5), 128);
        assert_eq!(BandCap::Scaled(64).at(2.0), 64);
    }
}
