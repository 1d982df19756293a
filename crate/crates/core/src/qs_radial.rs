//! The smoothing operators `Q_s f(x) = ∫ ⟨x,y⟩_M^{−s} f(y) dvol(y)` on H³,
//! their cutoff regularizations, and the radial Laplacian of functions of
//! `ρ = ⟨x,y⟩_M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::{chi, CHI_FLAT, CHI_SUPPORT};
use crate::exterior_core::{mink_inner, MinkowskiVector};
use crate::hyperboloid::{boost_from_origin, H3Point};
use crate::quadrature::{uniform_breaks, Rule1d, SphereGrid};

/// A profile `ψ(ρ)` on `ρ ≥ 1`.
pub trait RadialProfile: Sync {
    /// `∂_ρ^order ψ(ρ)`; orders above [`RadialProfile::max_order`] return NaN.
    fn deriv(&self, rho: f64, order: usize) -> f64;

    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn eval(&self, rho: f64) -> f64 {
        self.deriv(rho, 0)
    }

    fn d1(&self, rho: f64) -> f64 {
        self.deriv(rho, 1)
    }

    fn d2(&self, rho: f64) -> f64 {
        self.deriv(rho, 2)
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for &P {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        (**self).deriv(rho, order)
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for Box<P> {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        (**self).deriv(rho, order)
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
}

/// `ψ(ρ) = c·ρ^{−s}`; `s = 0` gives constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub coeff: f64,
    pub s: f64,
}

impl PowerProfile {
    pub fn new(s: f64) -> Self {
        Self { coeff: 1.0, s }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeff: c, s: 0.0 }
    }
}

impl RadialProfile for PowerProfile {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        let ff: f64 = (0..order).map(|i| -self.s - i as f64).product();
        self.coeff * ff * rho.powf(-self.s - order as f64)
    }
}

/// `ψ(ρ) = exp(−arccosh²ρ)`, a Gaussian in the hyperbolic distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianDistanceProfile;

impl GaussianDistanceProfile {
    /// `q = arccosh²ρ` and its first two derivatives, stable at `ρ = 1`.
    fn q(rho: f64) -> [f64; 3] {
        let a = rho.max(1.0).acosh();
        if a < 0.5 {
            // a/sinh a and (a cosh a − sinh a)/a³ by series
            let a2 = a * a;
            let mut term = 1.0;
            let mut sinhc = 1.0;
            let mut h = 0.0;
            for n in 1..12 {
                let k = 2 * n;
                term *= a2 / ((k * (k + 1)) as f64);
                sinhc += term;
                h += k as f64 * a2.powi(n as i32 - 1) / factorial(k + 1);
            }
            let s3 = sinhc.powi(3);
            [a2, 2.0 / sinhc, -2.0 * h / s3]
        } else {
            let (sh, ch) = (a.sinh(), a.cosh());
            [a * a, 2.0 * a / sh, 2.0 * (sh - a * ch) / sh.powi(3)]
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl RadialProfile for GaussianDistanceProfile {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        let [q, q1, q2] = Self::q(rho);
        let e = (-q).exp();
        match order {
            0 => e,
            1 => -q1 * e,
            2 => (q1 * q1 - q2) * e,
            _ => f64::NAN,
        }
    }
    fn max_order(&self) -> usize {
        2
    }
}

type Callable = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A profile from explicit `ψ, ψ', ψ''` callables.
pub struct FnProfile {
    pub eval: Callable,
    pub d1: Callable,
    pub d2: Callable,
}

impl FnProfile {
    pub fn new(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { eval: Box::new(eval), d1: Box::new(d1), d2: Box::new(d2) }
    }
}

impl RadialProfile for FnProfile {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        match order {
            0 => (self.eval)(rho),
            1 => (self.d1)(rho),
            2 => (self.d2)(rho),
            _ => f64::NAN,
        }
    }
    fn max_order(&self) -> usize {
        2
    }
}

/// Max relative deviation of `d1, d2` from central differences of `eval` on `ρ ∈ [1+h, 50]`.
pub fn profile_consistency<P: RadialProfile + ?Sized>(p: &P, samples: usize, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let rho = 1.0 + 2.0 * h + (49.0 - 2.0 * h) * i as f64 / (samples.max(2) - 1) as f64;
        let (fp, f0, fm) = (p.eval(rho + h), p.eval(rho), p.eval(rho - h));
        let e1 = ((fp - fm) / (2.0 * h) - p.d1(rho)).abs() / (1.0 + p.d1(rho).abs());
        let e2 = ((fp - 2.0 * f0 + fm) / (h * h) - p.d2(rho)).abs() / (1.0 + p.d2(rho).abs());
        worst = worst.max(e1).max(e2);
    }
    worst
}

/// `ψ̃(ρ) = (1−ρ²)ψ″(ρ) − 3ρψ′(ρ)`, so that `−Δ_g ψ(⟨x,y⟩) = ψ̃(⟨x,y⟩)`.
#[derive(Clone, Copy, Debug)]
pub struct RadialLaplacian<P> {
    pub inner: P,
}

pub fn radial_laplacian<P: RadialProfile>(p: P) -> RadialLaplacian<P> {
    RadialLaplacian { inner: p }
}

impl<P: RadialProfile> RadialProfile for RadialLaplacian<P> {
    fn deriv(&self, rho: f64, order: usize) -> f64 {
        if order > self.max_order() {
            return f64::NAN;
        }
        let n = order as f64;
        let d = |k| self.inner.deriv(rho, k);
        (1.0 - rho * rho) * d(order + 2) - 2.0 * n * rho * d(order + 1) - n * (n - 1.0) * d(order)
            - 3.0 * rho * d(order + 1)
            - 3.0 * n * d(order)
    }
    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(2)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsError {
    #[error("Q_s needs s > 2, got {0}")]
    InvalidOrder(f64),
    #[error("regularization scale must be positive, got {0}")]
    InvalidEps(f64),
    #[error("quadrature sizes must be positive")]
    InvalidGrid,
    #[error("operation needs a regularization scale ε")]
    MissingEps,
}

/// Parameters of `Q_s` and its regularization `Q_{s,χ,ε}` with the fixed cutoff
/// [`crate::cutoff::chi`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsConfig {
    pub s: f64,
    /// `None` for the unregularized operator.
    pub eps: Option<f64>,
    /// Gauss–Legendre nodes per radial panel of width at most one.
    pub radial_nodes: usize,
    /// Polar nodes of the direction grid; the azimuth uses twice as many.
    pub sphere_order: usize,
    /// Relative change allowed when all orders are doubled.
    pub tol: f64,
}

impl QsConfig {
    pub fn new(s: f64) -> Result<Self, QsError> {
        let c = Self { s, eps: None, radial_nodes: 16, sphere_order: 8, tol: default_tolerance(s) };
        c.validate()?;
        Ok(c)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, QsError> {
        self.eps = Some(eps);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), QsError> {
        if !(self.s > 2.0) || !self.s.is_finite() {
            return Err(QsError::InvalidOrder(self.s));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) || !e.is_finite() {
                return Err(QsError::InvalidEps(e));
            }
        }
        if self.radial_nodes == 0 || self.sphere_order == 0 || !(self.tol > 0.0) {
            return Err(QsError::InvalidGrid);
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        Self { radial_nodes: 2 * self.radial_nodes, sphere_order: 2 * self.sphere_order, ..*self }
    }
}

/// Relative tolerance: `10⁻⁶` for `s ≥ 4`, `10⁻⁵` below.
pub fn default_tolerance(s: f64) -> f64 {
    if s >= 4.0 {
        1e-6
    } else {
        1e-5
    }
}

/// Radius beyond which `∫ cosh^{−s}ρ sinh²ρ dρ` is below `10⁻¹⁶`.
pub fn unregularized_radius(s: f64) -> f64 {
    let a = s - 2.0;
    ((2f64.powf(a) / a).ln().max(0.0) + 16.0 * 10f64.ln()) / a
}

/// Radial panels: unit panels where `χ(ε cosh ρ) = 1`, then eight panels across the
/// transition `cosh ρ ∈ [1/ε, 2/ε]`, after which the cutoff vanishes.
pub fn radial_breaks(s: f64, eps: Option<f64>) -> Vec<f64> {
    match eps {
        None => uniform_breaks(0.0, unregularized_radius(s), 1.0),
        Some(e) => {
            if e >= CHI_SUPPORT {
                return vec![0.0];
            }
            let flat = (CHI_FLAT / e).max(1.0).acosh();
            let end = (CHI_SUPPORT / e).acosh();
            let mut b = uniform_breaks(0.0, flat, 1.0);
            if flat == 0.0 {
                b = vec![0.0];
            }
            b.extend((1..=8).map(|i| flat + (end - flat) * i as f64 / 8.0));
            b
        }
    }
}

/// A quadrature value with its doubled-order companion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsValue {
    pub value: f64,
    pub refined: f64,
    pub rel_change: f64,
    pub tol: f64,
    pub converged: bool,
}

fn q_s_once(cfg: &QsConfig, x: &H3Point, f: &(dyn Fn(&H3Point) -> f64 + Sync)) -> f64 {
    let breaks = radial_breaks(cfg.s, cfg.eps);
    if breaks.len() < 2 {
        return 0.0;
    }
    let rule = Rule1d::composite(&breaks, cfg.radial_nodes);
    let grid = SphereGrid::new(cfg.sphere_order, 2 * cfg.sphere_order);
    let boost = boost_from_origin(x);
    let shells: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&r, &w)| {
            let (sh, ch) = (r.sinh(), r.cosh());
            let cut = cfg.eps.map_or(1.0, |e| chi(e * ch));
            if cut == 0.0 {
                return 0.0;
            }
            let k = w * cut * ch.powf(-cfg.s) * sh * sh;
            k * grid.integrate(|n| {
                let y = MinkowskiVector::new(ch, sh * n.nu[0], sh * n.nu[1], sh * n.nu[2]);
                f(&H3Point::normalized(y.transform(&boost)))
            })
        })
        .collect();
    shells.iter().sum()
}

/// `Q_s F(x)` (or `Q_{s,χ,ε} F(x)` when `cfg.eps` is set) by geodesic polar quadrature around `x`.
pub fn q_s_apply_at(cfg: &QsConfig, x: &H3Point, f: &(dyn Fn(&H3Point) -> f64 + Sync)) -> Result<QsValue, QsError> {
    cfg.validate()?;
    let value = q_s_once(cfg, x, f);
    let refined = q_s_once(&cfg.doubled(), x, f);
    let rel_change = (value - refined).abs() / refined.abs().max(f64::MIN_POSITIVE);
    let rel_change = if value == refined { 0.0 } else { rel_change };
    Ok(QsValue { value, refined, rel_change, tol: cfg.tol, converged: rel_change <= cfg.tol })
}

pub fn q_s_apply_at_origin(cfg: &QsConfig, f: &(dyn Fn(&H3Point) -> f64 + Sync)) -> Result<QsValue, QsError> {
    q_s_apply_at(cfg, &H3Point::origin(), f)
}

/// `Q_{s,χ,ε} F(e₀)`; `cfg.eps` must be set.
pub fn q_s_regularized(cfg: &QsConfig, f: &(dyn Fn(&H3Point) -> f64 + Sync)) -> Result<QsValue, QsError> {
    if cfg.eps.is_none() {
        return Err(QsError::MissingEps);
    }
    q_s_apply_at_origin(cfg, f)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    crate::sphere_conv::log_log_slope(xs, ys)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSequence {
    pub s: f64,
    pub eps: Vec<f64>,
    pub values: Vec<QsValue>,
    pub limit: QsValue,
    /// `|Q_{s,χ,ε}F − Q_s F|`.
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Values nondecreasing as ε decreases.
    pub monotone: bool,
}

/// `Q_{s,χ,ε}F(e₀)` along `eps_list` against the unregularized value.
pub fn regularization_sequence(
    cfg: &QsConfig,
    f: &(dyn Fn(&H3Point) -> f64 + Sync),
    eps_list: &[f64],
) -> Result<RegularizationSequence, QsError> {
    let base = QsConfig { eps: None, ..*cfg };
    let limit = q_s_apply_at_origin(&base, f)?;
    let values = eps_list
        .iter()
        .map(|&e| q_s_apply_at_origin(&base.with_eps(e)?, f))
        .collect::<Result<Vec<_>, _>>()?;
    let errors: Vec<f64> = values.iter().map(|v| (v.refined - limit.refined).abs()).collect();
    let mut order: Vec<usize> = (0..eps_list.len()).collect();
    order.sort_by(|&a, &b| eps_list[b].total_cmp(&eps_list[a]));
    let monotone = order.windows(2).all(|w| values[w[1]].refined >= values[w[0]].refined);
    let slope = log_log_slope(eps_list, &errors);
    Ok(RegularizationSequence { s: cfg.s, eps: eps_list.to_vec(), values, limit, errors, slope, monotone })
}

/// `f(y) = φ(⟨y, c⟩_M)` for a profile `φ` and center `c`.
pub struct RadialTestFunction {
    pub name: String,
    pub profile: Box<dyn RadialProfile + Send>,
    pub center: H3Point,
}

impl RadialTestFunction {
    pub fn new(name: &str, profile: impl RadialProfile + Send + 'static, center: H3Point) -> Self {
        Self { name: name.to_string(), profile: Box::new(profile), center }
    }

    pub fn eval(&self, y: &H3Point) -> f64 {
        self.profile.eval(mink_inner(y.coords(), self.center.coords()).max(1.0))
    }

    /// `−Δ_g f(y)` through the radial Laplacian of the profile.
    pub fn neg_laplacian(&self, y: &H3Point) -> f64 {
        radial_laplacian(&self.profile).eval(mink_inner(y.coords(), self.center.coords()).max(1.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub s: f64,
    pub function: String,
    /// `Q_s((−Δ − s(2−s)) f)(e₀)`, the Laplacian moved onto `f`.
    pub lhs_green: f64,
    /// `∫ [(−Δ_x − s(2−s)) ⟨x,y⟩^{−s}]_{x=e₀} f(y) dvol`, via the radial Laplacian of the kernel.
    pub lhs_kernel: f64,
    /// `s(s+1) Q_{s+2} f(e₀)`.
    pub rhs: f64,
    pub residual_green: f64,
    pub residual_kernel: f64,
    /// `max(residual) / |rhs|`.
    pub relative: f64,
    pub converged: bool,
}

/// Both forms of `(−Δ − s(2−s)) Q_s f = s(s+1) Q_{s+2} f` at `e₀`, with the
/// unregularized kernels.
pub fn intertwining_residual(cfg: &QsConfig, f: &RadialTestFunction) -> Result<IntertwiningReport, QsError> {
    let s = cfg.s;
    let base = QsConfig { eps: None, ..*cfg };
    let shift = s * (2.0 - s);
    let green = q_s_apply_at_origin(&base, &|y: &H3Point| f.neg_laplacian(y) - shift * f.eval(y))?;
    let rhs_q = q_s_apply_at_origin(&QsConfig { s: s + 2.0, ..base }, &|y: &H3Point| f.eval(y))?;
    let rhs = s * (s + 1.0) * rhs_q.value;

    // The kernel side: ∫ K(y0) f(y) dvol with K = ψ̃ − s(2−s)ψ, ψ = ρ^{-s}, written as
    // Q_s of K(y0) y0^{s} f so the same quadrature is used.
    let tilde = radial_laplacian(PowerProfile::new(s));
    let kernel_side = q_s_apply_at_origin(&base, &|y: &H3Point| {
        let y0 = y.coords().0[0];
        (tilde.eval(y0) - shift * y0.powf(-s)) * y0.powf(s) * f.eval(y)
    })?;
    let residual_green = (green.value - rhs).abs();
    let residual_kernel = (kernel_side.value - rhs).abs();
    let relative = residual_green.max(residual_kernel) / rhs.abs().max(f64::MIN_POSITIVE);
    Ok(IntertwiningReport {
        s,
        function: f.name.clone(),
        lhs_green: green.value,
        lhs_kernel: kernel_side.value,
        rhs,
        residual_green,
        residual_kernel,
        relative,
        converged: green.converged && rhs_q.converged && kernel_side.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn power_profile_laplacian() {
        for s in [2.5, 3.0, 4.0] {
            let t = radial_laplacian(PowerProfile::new(s));
            for rho in [1.0f64, 1.7, 5.0, 40.0] {
                let want = s * (s + 1.0) * rho.powf(-s - 2.0) + s * (2.0 - s) * rho.powf(-s);
                assert!((t.eval(rho) - want).abs() < 1e-13 * (1.0 + want.abs()));
            }
        }
        assert_eq!(radial_laplacian(PowerProfile::constant(2.0)).eval(3.0), 0.0);
    }

    #[test]
    fn gaussian_profile_consistent() {
        let g = GaussianDistanceProfile;
        assert!(profile_consistency(&g, 200, 1e-4) < 1e-6);
        // continuity across the series switch and at ρ = 1
        let a = 0.5f64;
        let (l, r) = (a.cosh() * (1.0 - 1e-12), a.cosh() * (1.0 + 1e-12));
        assert!((g.d2(l) - g.d2(r)).abs() < 1e-9);
        assert!((g.d1(1.0) + 2.0).abs() < 1e-14);
        assert!((g.d2(1.0) - (4.0 + 2.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn q4_of_one() {
        let cfg = QsConfig::new(4.0).unwrap();
        let v = q_s_apply_at_origin(&cfg, &|_| 1.0).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-10, "{v:?}");
        assert!(v.converged);
        assert_eq!(q_s_apply_at_origin(&cfg, &|_| 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn cutoff_kills_everything_for_large_eps() {
        let cfg = QsConfig::new(4.0).unwrap().with_eps(2.0).unwrap();
        assert_eq!(q_s_regularized(&cfg, &|_| 1.0).unwrap().value, 0.0);
        assert_eq!(q_s_regularized(&QsConfig::new(4.0).unwrap(), &|_| 1.0), Err(QsError::MissingEps));
    }

    #[test]
    fn config_validation() {
        assert_eq!(QsConfig::new(2.0), Err(QsError::InvalidOrder(2.0)));
        assert!(QsConfig::new(3.0).unwrap().with_eps(-1.0).is_err());
    }
}
