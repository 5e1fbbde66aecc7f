//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// `v^{⊗n}`.
pub fn tensor_power_vec(v: &CVec, n: usize) -> CVec {
    let mut out = CVec::from_element(1, ONE);
    for _ in 0..n {
        out = kron_vec(&out, v);
    }
    out
}

pub fn tensor_power(m: &CMat, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for _ in 0..n {
        out = kron(&out, m);
    }
    out
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Hilbert–Schmidt pairing `tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn unitary_deviation(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`; eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Count of singular values above `rel_tol` times the largest.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let Some(&top) = sv.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Projector onto the span of eigenvectors of a Hermitian matrix whose
/// eigenvalue exceeds `threshold`.
pub fn spectral_projector(m: &CMat, threshold: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut p = CMat::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v > threshold {
            let col: CVec = vecs.column(k).into_owned();
            p += outer(&col);
        }
    }
    p
}

pub fn flatten(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unflatten(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Incremental orthonormal basis under the Euclidean (equivalently
/// Hilbert–Schmidt) inner product, using modified Gram–Schmidt with one
/// reorthogonalization pass.
#[derive(Debug, Clone)]
pub struct SpanBuilder {
    basis: Vec<CVec>,
    rel_tol: f64,
}

impl SpanBuilder {
    pub fn new(rel_tol: f64) -> Self {
        SpanBuilder {
            basis: Vec::new(),
            rel_tol,
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    pub fn into_basis(self) -> Vec<CVec> {
        self.basis
    }

    fn residual(&self, v: &CVec) -> CVec {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let coeff = b.dotc(&r);
                r.axpy(-coeff, b, ONE);
            }
        }
        r
    }

    /// Adds `v` if it has a component outside the current span; returns
    /// whether the rank grew.
    pub fn push(&mut self, v: &CVec) -> bool {
        let scale = v.norm();
        if scale == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn > self.rel_tol * scale {
            self.basis.push(r.unscale(rn));
            true
        } else {
            false
        }
    }

    /// Euclidean norm of the component of `v` orthogonal to the span.
    pub fn distance(&self, v: &CVec) -> f64 {
        self.residual(v).norm()
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &CVec) -> CVec {
        let mut p = CVec::zeros(v.len());
        for b in &self.basis {
            p.axpy(b.dotc(v), b, ONE);
        }
        p
    }
}
