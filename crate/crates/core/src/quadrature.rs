//! Gauss–Legendre rules, composite panels, and product grids on S².

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A 1-D rule: nodes and weights on a finite union of panels.
#[derive(Clone, Debug, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss–Legendre with `n` nodes on each panel between consecutive breakpoints.
    pub fn composite(breaks: &[f64], n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut nodes = Vec::with_capacity(n * breaks.len());
        let mut weights = Vec::with_capacity(n * breaks.len());
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            if b <= a {
                continue;
            }
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(c + h * xi);
                weights.push(h * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn on(a: f64, b: f64, n: usize) -> Self {
        Self::composite(&[a, b], n)
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Breakpoints splitting `[a, b]` into panels no wider than `max_width`.
pub fn uniform_breaks(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let m = (((b - a) / max_width).ceil() as usize).max(1);
    (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect()
}

/// Geometric breakpoints `a, a + (b-a)q^{m-1}, ..., b` refining towards `a`.
pub fn graded_breaks(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut v = vec![a];
    for j in (0..levels).rev() {
        v.push(a + (b - a) * 0.5f64.powi(j as i32));
    }
    v
}

/// One node of a product grid on S² with its orienting tangent frame.
#[derive(Clone, Copy, Debug)]
pub struct SphereNode {
    pub nu: [f64; 3],
    pub e_theta: [f64; 3],
    pub e_phi: [f64; 3],
    pub weight: f64,
}

/// Gauss–Legendre in `cos θ` times a uniform azimuth grid, weights summing to 4π.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub nodes: Vec<SphereNode>,
}

impl SphereGrid {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Self {
        let (c, w) = gauss_legendre(n_polar);
        let dphi = 2.0 * PI / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        for (ci, wi) in c.iter().zip(&w) {
            let s = (1.0 - ci * ci).max(0.0).sqrt();
            for k in 0..n_azimuth {
                let phi = (k as f64 + 0.5) * dphi;
                let (sp, cp) = phi.sin_cos();
                nodes.push(SphereNode {
                    nu: [s * cp, s * sp, *ci],
                    e_theta: [ci * cp, ci * sp, -s],
                    e_phi: [-sp, cp, 0.0],
                    weight: wi * dphi,
                });
            }
        }
        Self { n_polar, n_azimuth, nodes }
    }

    /// Largest spherical-harmonic degree `L` for which products of two
    /// degree-`L` functions are integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_polar - 1).min(self.n_azimuth - 1) / 2
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(&SphereNode) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * f(n)).sum()
    }
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn scale3(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// An orthonormal pair completing `n` (unit) to a right-handed frame `(a, b, n)`.
pub fn complete_frame3(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let seed = if n[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() < 0.6 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let a = sub3(&seed, &scale3(n, dot3(&seed, n)));
    let a = scale3(&a, 1.0 / norm3(&a));
    let b = cross3(n, &a);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn large_rule_weights_sum() {
        let (x, w) = gauss_legendre(200);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn sphere_grid_area_and_moments() {
        let g = SphereGrid::new(8, 16);
        assert!((g.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-13);
        let q = g.integrate(|n| n.nu[2] * n.nu[2]);
        assert!((q - 4.0 * PI / 3.0).abs() < 1e-13);
        for n in &g.nodes {
            assert!((norm3(&n.nu) - 1.0).abs() < 1e-14);
            let c = cross3(&n.nu, &n.e_theta);
            assert!(norm3(&sub3(&c, &n.e_phi)) < 1e-14);
        }
    }

    #[test]
    fn composite_rule() {
        let r = Rule1d::composite(&uniform_breaks(0.0, 3.0, 0.7), 6);
        assert!((r.integrate(|x| x.exp()) - (3f64.exp() - 1.0)).abs() < 1e-12);
        let g = graded_breaks(0.0, 1.0, 4);
        assert_eq!(g, vec![0.0, 0.125, 0.25, 0.5, 1.0]);
    }
}
