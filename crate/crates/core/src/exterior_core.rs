//! Minkowski linear algebra on R^{1,3}, dense alternating forms, and the
//! rank-augmentation search for invertible matrices in a linear subspace.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of R^{1,3}, components `(x0, x1, x2, x3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiVector(pub [f64; 4]);

impl MinkowskiVector {
    pub const ZERO: Self = Self([0.0; 4]);

    pub const fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self([x0, x1, x2, x3])
    }

    /// The standard basis vector `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 4];
        c[i] = 1.0;
        Self(c)
    }

    pub fn from_parts(t: f64, s: [f64; 3]) -> Self {
        Self([t, s[0], s[1], s[2]])
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm_sq(&self) -> f64 {
        mink_inner(self, self)
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn to_vector4(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::from_row_slice(&self.0)
    }

    pub fn from_vector4(v: &nalgebra::Vector4<f64>) -> Self {
        Self([v[0], v[1], v[2], v[3]])
    }

    /// Apply a 4x4 matrix.
    pub fn transform(&self, m: &Matrix4<f64>) -> Self {
        Self::from_vector4(&(m * self.to_vector4()))
    }
}

impl Index<usize> for MinkowskiVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for MinkowskiVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for MinkowskiVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for MinkowskiVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

impl Mul<f64> for MinkowskiVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }
}

impl Mul<MinkowskiVector> for f64 {
    type Output = MinkowskiVector;
    fn mul(self, v: MinkowskiVector) -> MinkowskiVector {
        v * self
    }
}

impl AddAssign for MinkowskiVector {
    fn add_assign(&mut self, o: Self) {
        for i in 0..4 {
            self.0[i] += o.0[i];
        }
    }
}

impl SubAssign for MinkowskiVector {
    fn sub_assign(&mut self, o: Self) {
        for i in 0..4 {
            self.0[i] -= o.0[i];
        }
    }
}

/// `a0 b0 - a1 b1 - a2 b2 - a3 b3`.
pub fn mink_inner(a: &MinkowskiVector, b: &MinkowskiVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// The Gram matrix `diag(1,-1,-1,-1)`.
pub fn minkowski_gram() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// `det(a, b, c, d)` with the vectors as rows.
pub fn det4(a: &MinkowskiVector, b: &MinkowskiVector, c: &MinkowskiVector, d: &MinkowskiVector) -> f64 {
    Matrix4::from_rows(&[
        a.to_vector4().transpose(),
        b.to_vector4().transpose(),
        c.to_vector4().transpose(),
        d.to_vector4().transpose(),
    ])
    .determinant()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree mismatch: forms have total degree {degree} but {vectors} vectors were supplied")]
    DegreeMismatch { degree: usize, vectors: usize },
    #[error("interior product of a 0-form")]
    ZeroDegree,
    #[error("ambient dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    TooLarge(usize),
}

pub const MAX_DIM: usize = 16;

/// Increasing k-subsets of `0..d`, encoded as bit masks, in lexicographic order.
fn subsets(d: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > d {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < d - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of the shuffle placing the elements of `a` before those of `b`.
fn shuffle_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    for i in mask_indices(a) {
        inversions += (b & ((1u32 << i) - 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn det_dense(m: &mut [f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a * n + c].abs().total_cmp(&m[b * n + c].abs()))
            .unwrap();
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..n {
                m.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = m[c * n + c];
        det *= piv;
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            if f != 0.0 {
                for j in c..n {
                    m[r * n + j] -= f * m[c * n + j];
                }
            }
        }
    }
    det
}

/// A degree-k alternating form on R^d, stored densely over increasing
/// multi-indices. Coefficients are the values on the corresponding basis
/// vectors, so `dx^1 ∧ dx^2` has coefficient 1 at `{1,2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingForm {
    dim: usize,
    degree: usize,
    masks: Vec<u32>,
    coeffs: Vec<f64>,
}

impl AlternatingForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension {dim} too large");
        let masks = subsets(dim, degree);
        let coeffs = vec![0.0; masks.len()];
        Self { dim, degree, masks, coeffs }
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        let mut f = Self::zero(dim, 0);
        f.coeffs[0] = c;
        f
    }

    /// The 1-form `ξ ↦ Σ c_i ξ_i`.
    pub fn covector(c: &[f64]) -> Self {
        let mut f = Self::zero(c.len(), 1);
        for (i, &ci) in c.iter().enumerate() {
            f.coeffs[i] = ci;
        }
        f
    }

    /// `dx^{i1} ∧ ... ∧ dx^{ik}` (indices in any order, sign included).
    pub fn monomial(dim: usize, idx: &[usize]) -> Self {
        let mut f = Self::zero(dim, idx.len());
        f.add_to(idx, 1.0);
        f
    }

    /// Build from the values on basis tuples `(e_{i1}, ..., e_{ik})`, `i1 < ... < ik`.
    pub fn from_fn(dim: usize, degree: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut out = Self::zero(dim, degree);
        for (j, &m) in out.masks.iter().enumerate() {
            out.coeffs[j] = f(&mask_indices(m));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices of the stored coefficients, in storage order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        self.masks.iter().map(|&m| mask_indices(m)).collect()
    }

    fn position(&self, mask: u32) -> usize {
        self.masks.iter().position(|&m| m == mask).expect("mask of matching degree")
    }

    fn sorted_mask(idx: &[usize]) -> Option<(u32, f64)> {
        let mut v = idx.to_vec();
        let mut sign = 1.0;
        for i in 0..v.len() {
            for j in 0..v.len() - 1 - i {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    sign = -sign;
                } else if v[j] == v[j + 1] {
                    return None;
                }
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((v.iter().fold(0u32, |m, &i| m | (1 << i)), sign))
    }

    /// Coefficient at a multi-index in any order (antisymmetry applied).
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.degree);
        match Self::sorted_mask(idx) {
            Some((m, s)) => s * self.coeffs[self.position(m)],
            None => 0.0,
        }
    }

    fn add_to(&mut self, idx: &[usize], c: f64) {
        if let Some((m, s)) = Self::sorted_mask(idx) {
            let p = self.position(m);
            self.coeffs[p] += s * c;
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    fn check_same(&self, o: &Self) -> Result<(), FormError> {
        if self.dim != o.dim {
            return Err(FormError::DimensionMismatch { expected: self.dim, got: o.dim });
        }
        if self.degree != o.degree {
            return Err(FormError::DegreeMismatch { degree: self.degree, vectors: o.degree });
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, FormError> {
        self.check_same(o)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&o.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, FormError> {
        self.try_add(&o.scale(-1.0))
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Wedge product with the determinant normalization
    /// `(a ∧ b)(v_1..v_{k+l}) = Σ_shuffles sign · a(..) b(..)`.
    pub fn wedge(&self, o: &Self) -> Result<Self, FormError> {
        if self.dim != o.dim {
            return Err(FormError::DimensionMismatch { expected: self.dim, got: o.dim });
        }
        let mut out = Self::zero(self.dim, self.degree + o.degree);
        if out.masks.is_empty() {
            return Ok(out);
        }
        for (i, &a) in self.masks.iter().enumerate() {
            let ca = self.coeffs[i];
            if ca == 0.0 {
                continue;
            }
            for (j, &b) in o.masks.iter().enumerate() {
                let cb = o.coeffs[j];
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                let p = out.position(a | b);
                out.coeffs[p] += shuffle_sign(a, b) * ca * cb;
            }
        }
        Ok(out)
    }

    /// Evaluate on `degree` vectors given by coordinates.
    pub fn eval<V: AsRef<[f64]>>(&self, vectors: &[V]) -> Result<f64, FormError> {
        if vectors.len() != self.degree {
            return Err(FormError::DegreeMismatch { degree: self.degree, vectors: vectors.len() });
        }
        for v in vectors {
            if v.as_ref().len() != self.dim {
                return Err(FormError::DimensionMismatch { expected: self.dim, got: v.as_ref().len() });
            }
        }
        let k = self.degree;
        let mut total = 0.0;
        let mut minor = vec![0.0; k * k];
        for (j, &m) in self.masks.iter().enumerate() {
            let c = self.coeffs[j];
            if c == 0.0 {
                continue;
            }
            let rows = mask_indices(m);
            for (r, &ri) in rows.iter().enumerate() {
                for (col, v) in vectors.iter().enumerate() {
                    minor[r * k + col] = v.as_ref()[ri];
                }
            }
            total += c * det_dense(&mut minor, k);
        }
        Ok(total)
    }

    /// `(ι_v w)(u_2..u_k) = w(v, u_2..u_k)`.
    pub fn interior(&self, v: &[f64]) -> Result<Self, FormError> {
        if self.degree == 0 {
            return Err(FormError::ZeroDegree);
        }
        if v.len() != self.dim {
            return Err(FormError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (j, &m) in self.masks.iter().enumerate() {
            let c = self.coeffs[j];
            if c == 0.0 {
                continue;
            }
            for (pos, i) in mask_indices(m).into_iter().enumerate() {
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let p = out.position(m & !(1 << i));
                out.coeffs[p] += sign * v[i] * c;
            }
        }
        Ok(out)
    }

    /// Pullback by the linear map whose `j`-th column holds the image of `e_j`.
    pub fn pullback(&self, columns: &[Vec<f64>]) -> Result<Self, FormError> {
        let mut err = None;
        let out = Self::from_fn(columns.len(), self.degree, |idx| {
            let vs: Vec<&[f64]> = idx.iter().map(|&i| columns[i].as_slice()).collect();
            self.eval(&vs).unwrap_or_else(|e| {
                err = Some(e);
                0.0
            })
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn binomial_size(dim: usize, k: usize) -> usize {
        binomial(dim, k)
    }
}

/// Wedge all forms together and evaluate on the vectors.
pub fn wedge_eval<V: AsRef<[f64]>>(forms: &[AlternatingForm], vectors: &[V]) -> Result<f64, FormError> {
    let Some(first) = forms.first() else {
        return if vectors.is_empty() {
            Ok(1.0)
        } else {
            Err(FormError::DegreeMismatch { degree: 0, vectors: vectors.len() })
        };
    };
    let total: usize = forms.iter().map(|f| f.degree()).sum();
    if total != vectors.len() {
        return Err(FormError::DegreeMismatch { degree: total, vectors: vectors.len() });
    }
    let mut acc = first.clone();
    for f in &forms[1..] {
        acc = acc.wedge(f)?;
    }
    acc.eval(vectors)
}

pub fn interior_product(v: &[f64], w: &AlternatingForm) -> Result<AlternatingForm, FormError> {
    w.interior(v)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubspaceError {
    #[error("empty basis")]
    Empty,
    #[error("basis element {0} has the wrong shape")]
    Shape(usize),
    #[error("basis elements are linearly dependent")]
    Dependent,
    #[error("basis element {0} is not symmetric")]
    NotSymmetric(usize),
}

/// A linear subspace of real n×n matrices given by a basis.
#[derive(Clone, Debug)]
pub struct MatrixSubspace {
    n: usize,
    basis: Vec<DMatrix<f64>>,
    symmetric: bool,
}

pub const RANK_RTOL: f64 = 1e-9;
pub const MAX_HALVINGS: usize = 40;

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

impl MatrixSubspace {
    pub fn new(n: usize, basis: Vec<DMatrix<f64>>, symmetric: bool) -> Result<Self, SubspaceError> {
        if basis.is_empty() {
            return Err(SubspaceError::Empty);
        }
        for (i, b) in basis.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(SubspaceError::Shape(i));
            }
            if symmetric && (b - b.transpose()).amax() > 1e-12 * b.amax().max(1.0) {
                return Err(SubspaceError::NotSymmetric(i));
            }
        }
        let stacked = DMatrix::from_fn(n * n, basis.len(), |r, c| basis[c][(r / n, r % n)]);
        if numerical_rank(&stacked) < basis.len() {
            return Err(SubspaceError::Dependent);
        }
        Ok(Self { n, basis, symmetric })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `Σ c_i B_i`.
    pub fn combination(&self, c: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (ci, b) in c.iter().zip(&self.basis) {
            m += b * *ci;
        }
        m
    }
}

/// Why the search stopped without an invertible matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NotFoundReason {
    /// Every basis element pairs to zero on the kernel/cokernel directions
    /// of a generic maximal-rank element: no invertible element exists and
    /// the pairing hypothesis fails at the witness vectors.
    HypothesisFailure { witness_right: Vec<f64>, witness_left: Vec<f64> },
    /// The step budget ran out before full rank.
    BudgetExhausted,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no invertible matrix found (reached rank {rank} of {n}): {reason:?}")]
pub struct NotFound {
    pub rank: usize,
    pub n: usize,
    pub reason: NotFoundReason,
}

/// Kernel (right) and cokernel (left) directions of `a` together with a
/// normalization `⟨A e_j, e*_j⟩ = 1` on the range part.
struct RankFrame {
    rank: usize,
    right: Vec<nalgebra::DVector<f64>>,
    left: Vec<nalgebra::DVector<f64>>,
}

fn rank_frame(a: &DMatrix<f64>, symmetric: bool) -> RankFrame {
    let n = a.nrows();
    if symmetric {
        let eig = SymmetricEigen::new(a.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
        let rank = order
            .iter()
            .filter(|&&i| lmax > 0.0 && eig.eigenvalues[i].abs() > RANK_RTOL * lmax)
            .count();
        let vecs: Vec<_> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        RankFrame { rank, right: vecs[rank..].to_vec(), left: vecs[rank..].to_vec() }
    } else {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let rank = order
            .iter()
            .filter(|&&i| smax > 0.0 && svd.singular_values[i] > RANK_RTOL * smax)
            .count();
        let right = order[rank..].iter().map(|&i| vt.row(i).transpose()).collect();
        let left = order[rank..].iter().map(|&i| u.column(i).into_owned()).collect();
        RankFrame { rank, right, left }
    }
}

/// Pick the basis element and kernel directions with the largest pairing
/// `⟨B e, e*⟩`, returning `(B index, pairing)`; `None` if all vanish.
fn best_direction(v: &MatrixSubspace, frame: &RankFrame, scale: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (bi, b) in v.basis.iter().enumerate() {
        let bscale = b.amax().max(f64::MIN_POSITIVE);
        let block = DMatrix::from_fn(frame.left.len(), frame.right.len(), |r, c| frame.left[r].dot(&(b * &frame.right[c])));
        let val = if v.symmetric {
            SymmetricEigen::new(block).eigenvalues.amax()
        } else {
            block.amax()
        };
        if val > 1e-10 * bscale.max(scale) && best.is_none_or(|(_, bv)| val > bv) {
            best = Some((bi, val));
        }
    }
    best
}

/// Deterministic generic combination used to certify maximal rank.
fn generic_element(v: &MatrixSubspace) -> DMatrix<f64> {
    let c: Vec<f64> = (0..v.basis.len())
        .map(|i| {
            let x = ((i as f64 + 1.0) * 0.754_877_666_246_692_7).fract();
            0.5 + x
        })
        .collect();
    v.combination(&c)
}

fn is_invertible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    numerical_rank(m) == n && m.determinant().abs() > 1e-10 * m.amax().powi(n as i32)
}

/// Rank augmentation: keep a maximal-rank `A`, find `B` with a nonzero
/// pairing on the kernel/cokernel directions of `A`, and replace `A` by
/// `A + tB` for `t = 1, 1/2, 1/4, ...` until the rank grows. The budget
/// bounds the number of augmentation steps.
pub fn find_invertible_in_subspace(v: &MatrixSubspace, budget: usize) -> Result<DMatrix<f64>, NotFound> {
    let n = v.n;
    let mut a = v
        .basis
        .iter()
        .max_by_key(|b| numerical_rank(b))
        .cloned()
        .expect("non-empty basis");
    let mut steps = 0usize;
    loop {
        let frame = rank_frame(&a, v.symmetric);
        if frame.rank == n {
            if is_invertible(&a) {
                return Ok(a);
            }
            return Err(NotFound { rank: n, n, reason: NotFoundReason::BudgetExhausted });
        }
        if steps >= budget {
            return Err(NotFound { rank: frame.rank, n, reason: NotFoundReason::BudgetExhausted });
        }
        steps += 1;
        let scale = a.amax();
        match best_direction(v, &frame, scale) {
            Some((bi, _)) => {
                let b = &v.basis[bi];
                let mut t = scale.max(1.0) / b.amax();
                let mut advanced = false;
                for _ in 0..=MAX_HALVINGS {
                    let cand = &a + b * t;
                    if numerical_rank(&cand) > frame.rank {
                        a = cand;
                        advanced = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !advanced {
                    return Err(NotFound { rank: frame.rank, n, reason: NotFoundReason::BudgetExhausted });
                }
            }
            None => {
                // No first-order increase from A. A generic element of V has
                // the maximal rank; continue from it if it beats A.
                let g = generic_element(v);
                let gr = numerical_rank(&g);
                if gr > frame.rank {
                    a = g;
                    continue;
                }
                let witness_right = frame.right[0].iter().copied().collect();
                let witness_left = frame.left[0].iter().copied().collect();
                return Err(NotFound {
                    rank: frame.rank,
                    n,
                    reason: NotFoundReason::HypothesisFailure { witness_right, witness_left },
                });
            }
        }
    }
}

/// Result of testing the pairing hypothesis at a given pair of vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingCheck {
    pub max_pairing: f64,
    pub hypothesis_holds: bool,
}

/// Check whether some basis element `B` has `⟨B w1, w2⟩ ≠ 0`
/// (for symmetric subspaces call with `w1 = w2 = w`).
pub fn pairing_hypothesis(v: &MatrixSubspace, w1: &[f64], w2: &[f64]) -> PairingCheck {
    let a = nalgebra::DVector::from_column_slice(w1);
    let b = nalgebra::DVector::from_column_slice(w2);
    let scale = v.basis.iter().map(|m| m.amax()).fold(0.0, f64::max) * a.norm() * b.norm();
    let max_pairing = v.basis.iter().map(|m| b.dot(&(m * &a)).abs()).fold(0.0, f64::max);
    PairingCheck { max_pairing, hypothesis_holds: max_pairing > 1e-12 * scale.max(f64::MIN_POSITIVE) }
}
