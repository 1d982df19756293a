//! The fixed smooth cutoff χ and a small truncated-Taylor jet type used to
//! differentiate it exactly.

use std::ops::{Add, Mul, Neg, Sub};

/// Truncated Taylor series `Σ_{k<N} a_k (x − x₀)^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize>(pub [f64; N]);

impl<const N: usize> Jet<N> {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = c;
        Self(a)
    }

    /// The identity function expanded at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = x0;
        if N > 1 {
            a[1] = 1.0;
        }
        Self(a)
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `f^{(k)}(x₀)` for `k < N`.
    pub fn derivatives(&self) -> [f64; N] {
        let mut fact = 1.0;
        std::array::from_fn(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            self.0[k] * fact
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|a| a * s))
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; N];
        b[0] = 1.0 / a[0];
        for k in 1..N {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s / a[0];
        }
        Self(b)
    }

    pub fn exp(&self) -> Self {
        let a = &self.0;
        let mut b = [0.0; N];
        b[0] = a[0].exp();
        for k in 1..N {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * b[k - j]).sum();
            b[k] = s / k as f64;
        }
        Self(b)
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| (0..=k).map(|j| self.0[j] * o.0[k - j]).sum()))
    }
}

/// `h(x) = e^{−1/x}` for `x > 0`, zero otherwise.
fn h_jet<const N: usize>(x: Jet<N>) -> Jet<N> {
    if x.value() <= 0.0 {
        Jet([0.0; N])
    } else {
        (-x.recip()).exp()
    }
}

/// Smooth step `S(x) = h(x)/(h(x) + h(1−x))`: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step_jet<const N: usize>(x: Jet<N>) -> Jet<N> {
    let x0 = x.value();
    if x0 <= 0.0 {
        return Jet([0.0; N]);
    }
    if x0 >= 1.0 {
        return Jet::constant(1.0);
    }
    let a = h_jet(x);
    let b = h_jet(Jet::constant(1.0) - x);
    a * (a + b).recip()
}

/// `χ(ρ) = 1 − S(|ρ| − 1)`: equal to 1 on `[0, 1]`, vanishing on `[2, ∞)`.
pub fn chi(rho: f64) -> f64 {
    chi_jet::<1>(rho).value()
}

pub fn chi_jet<const N: usize>(rho: f64) -> Jet<N> {
    let sgn = if rho < 0.0 { -1.0 } else { 1.0 };
    let mut x = Jet::<N>::variable(rho.abs() - 1.0);
    if N > 1 {
        x.0[1] = sgn;
    }
    Jet::constant(1.0) - smooth_step_jet(x)
}

/// `χ^{(k)}(ρ)` for `k < N`.
pub fn chi_derivatives<const N: usize>(rho: f64) -> [f64; N] {
    chi_jet::<N>(rho).derivatives()
}

/// Upper end of the support of χ.
pub const CHI_SUPPORT: f64 = 2.0;
/// χ ≡ 1 on `[0, CHI_FLAT]`.
pub const CHI_FLAT: f64 = 1.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_arithmetic() {
        // exp(x) at 0.3
        let e = Jet::<5>::variable(0.3).exp().derivatives();
        for d in e {
            assert!((d - 0.3f64.exp()).abs() < 1e-14);
        }
        // 1/x at 2: derivatives (-1)^k k! / 2^{k+1}
        let r = Jet::<4>::variable(2.0).recip().derivatives();
        assert_eq!(r, [0.5, -0.25, 0.25, -0.375]);
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(5.0), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let c = chi(1.0 + i as f64 / 100.0);
            assert!(c <= prev && (0.0..=1.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn chi_derivatives_match_differences() {
        let h = 1e-4;
        for &x in &[1.1, 1.37, 1.5, 1.8, 1.95] {
            let d = chi_derivatives::<4>(x);
            let fd1 = (chi(x + h) - chi(x - h)) / (2.0 * h);
            let fd2 = (chi(x + h) - 2.0 * chi(x) + chi(x - h)) / (h * h);
            assert!((d[1] - fd1).abs() < 1e-6 * (1.0 + d[1].abs()), "{x}");
            assert!((d[2] - fd2).abs() < 1e-4 * (1.0 + d[2].abs()), "{x}");
            let d1p = chi_derivatives::<4>(x + h)[2];
            let d1m = chi_derivatives::<4>(x - h)[2];
            assert!((d[3] - (d1p - d1m) / (2.0 * h)).abs() < 1e-4 * (1.0 + d[3].abs()));
        }
    }
}
