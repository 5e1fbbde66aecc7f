//! Dense operators on tensor-power spaces.
//!
//! Layout convention: copies are the outer index and the subsystem factors of
//! one copy are the inner index, so `(C^a ⊗ C^b)^{⊗n}` is stored as
//! `A₁B₁A₂B₂…`. A [`Layout`] is a concatenation of such blocks, which is how
//! `F ⊗ G` with `F` on `(C^a)^{⊗n}` and `G` on `(C^b)^{⊗n}` (stored
//! `A₁…AₙB₁…Bₙ`) is described. [`factor_reorder`] is the only place where
//! the two orderings are converted into each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE};
use crate::tol;

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    #[serde(with = "crate::json::cvec")]
    amps: CVec,
}

impl Ket {
    pub fn new(amps: CVec) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("empty ket".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Ket { amps })
    }

    /// Rescales to unit norm; errors on the zero vector.
    pub fn normalized(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if amps.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Ket {
            amps: amps.unscale(norm),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(CVec::from_iterator(amps.len(), amps.iter().map(|&x| C64::new(x, 0.0))))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = CVec::zeros(dim);
        amps[index] = ONE;
        Ket { amps }
    }

    /// `k`-th discrete Fourier vector, unbiased with respect to the computational basis.
    pub fn fourier(dim: usize, k: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let amps = CVec::from_fn(dim, |j, _| {
            C64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k % dim) as f64 / dim as f64)
        });
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket {
            amps: linalg::kron_vec(&self.amps, &other.amps),
        }
    }

    pub fn projector(&self) -> CMat {
        linalg::outer(&self.amps)
    }

    pub fn tensor_power(&self, n: usize) -> CVec {
        linalg::tensor_power_vec(&self.amps, n)
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn with_phase(&self, theta: f64) -> Ket {
        Ket {
            amps: &self.amps * C64::from_polar(1.0, theta),
        }
    }

    pub fn apply(&self, u: &CMat) -> Result<Ket> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.ncols(),
            });
        }
        Ket::normalized(u * &self.amps)
    }
}

/// Subsystem dimensions of one copy, repeated `copies` times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorShape {
    pub factor_dims: Vec<usize>,
    pub copies: usize,
}

impl FactorShape {
    pub fn new(factor_dims: Vec<usize>, copies: usize) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) || copies == 0 {
            return Err(Error::ShapeMismatch(format!(
                "factor dims {factor_dims:?} with {copies} copies"
            )));
        }
        Ok(FactorShape { factor_dims, copies })
    }

    pub fn single(d: usize, copies: usize) -> Self {
        FactorShape {
            factor_dims: vec![d],
            copies,
        }
    }

    pub fn local_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn total_dim(&self) -> usize {
        self.local_dim().pow(self.copies as u32)
    }
}

/// One tensor leg: subsystem label, copy index and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Leg {
    pub subsystem: usize,
    pub copy: usize,
    pub dim: usize,
}

/// Ordered concatenation of [`FactorShape`] blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout(pub Vec<FactorShape>);

impl Layout {
    pub fn single(d: usize, copies: usize) -> Self {
        Layout(vec![FactorShape::single(d, copies)])
    }

    pub fn interleaved(factor_dims: &[usize], copies: usize) -> Self {
        Layout(vec![FactorShape {
            factor_dims: factor_dims.to_vec(),
            copies,
        }])
    }

    /// `(C^{d₁})^{⊗n} ⊗ (C^{d₂})^{⊗n} ⊗ …`, one block per subsystem.
    pub fn grouped(factor_dims: &[usize], copies: usize) -> Self {
        Layout(factor_dims.iter().map(|&d| FactorShape::single(d, copies)).collect())
    }

    pub fn total_dim(&self) -> usize {
        self.0.iter().map(FactorShape::total_dim).product()
    }

    /// Legs in storage order (most significant first). Subsystem labels count
    /// factor positions across blocks, so `[a]ⁿ[b]ⁿ` and `[a,b]ⁿ` carry the
    /// same label set.
    pub fn legs(&self) -> Vec<Leg> {
        let mut legs = Vec::new();
        let mut base = 0;
        for block in &self.0 {
            for copy in 0..block.copies {
                for (f, &dim) in block.factor_dims.iter().enumerate() {
                    legs.push(Leg {
                        subsystem: base + f,
                        copy,
                        dim,
                    });
                }
            }
            base += block.factor_dims.len();
        }
        legs
    }

    pub fn concat(&self, other: &Layout) -> Layout {
        let mut blocks = self.0.clone();
        blocks.extend(other.0.iter().cloned());
        Layout(blocks)
    }

    pub fn as_single(&self) -> Option<&FactorShape> {
        match self.0.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

/// Square matrix on the space described by its [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    layout: Layout,
    matrix: CMat,
}

impl Op {
    pub fn new(layout: Layout, matrix: CMat) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Op { layout, matrix })
    }

    pub fn identity(layout: Layout) -> Self {
        let dim = layout.total_dim();
        Op {
            layout,
            matrix: linalg::identity(dim),
        }
    }

    pub fn zeros(layout: Layout) -> Self {
        let dim = layout.total_dim();
        Op {
            layout,
            matrix: CMat::zeros(dim, dim),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix under a different layout of equal total dimension.
    pub fn relabel(self, layout: Layout) -> Result<Self> {
        Op::new(layout, self.matrix)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

pub fn kron(a: &Op, b: &Op) -> Op {
    Op {
        layout: a.layout.concat(&b.layout),
        matrix: linalg::kron(&a.matrix, &b.matrix),
    }
}

/// Bijection on `{0, …, n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!("{images:?} is not a bijection")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// From a 1-based image list, as permutations are usually written.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidArgument("1-based images must be >= 1".into()));
        }
        Self::new(images.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(i, j);
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    /// Cycle lengths, weakly decreasing.
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            cycles.push(len);
        }
        cycles.sort_unstable_by(|a, b| b.cmp(a));
        cycles
    }

    pub fn sign(&self) -> i64 {
        let odd = self.cycle_type().iter().filter(|&&l| l % 2 == 0).count();
        if odd % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All `n!` permutations in lexicographic order of their image lists.
    pub fn all(n: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            let n = used.len();
            if prefix.len() == n {
                out.push(Permutation { images: prefix.clone() });
                return;
            }
            for i in 0..n {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
        out
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn digits_of(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

/// Conjugate `m` by the basis permutation that sends storage index
/// `map[i]` to `i`: `out[i, j] = m[map[i], map[j]]`.
fn conjugate_by_index_map(m: &CMat, map: &[usize]) -> CMat {
    let d = map.len();
    CMat::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

/// Operator permuting the tensor factors of `(C^d)^{⊗n}`: factor `k` is sent
/// to position `pi(k)`. This is a homomorphism, `op(π∘σ) = op(π)·op(σ)`.
pub fn perm_operator(pi: &Permutation, d: usize, n: usize) -> Result<Op> {
    perm_operator_on(pi, &[d], n)
}

/// Copy permutation acting on `(C^{d₁} ⊗ … ⊗ C^{d_k})^{⊗n}` (all subsystems
/// of a copy move together).
pub fn perm_operator_on(pi: &Permutation, factor_dims: &[usize], n: usize) -> Result<Op> {
    if pi.len() != n {
        return Err(Error::InvalidArgument(format!(
            "permutation on {} points used for {n} copies",
            pi.len()
        )));
    }
    let local: usize = factor_dims.iter().product();
    let dims = vec![local; n];
    let total = local.pow(n as u32);
    let st = strides(&dims);
    let mut m = CMat::zeros(total, total);
    let mut dig = vec![0; n];
    for input in 0..total {
        digits_of(input, &dims, &mut dig);
        let out: usize = (0..n).map(|k| dig[k] * st[pi.apply(k)]).sum();
        m[(out, input)] = ONE;
    }
    Op::new(Layout::interleaved(factor_dims, n), m)
}

/// `P₊ = (1/n!) Σ_π π` on `(C^d)^{⊗n}`.
pub fn sym_projector(d: usize, n: usize) -> Op {
    sym_projector_on(&[d], n)
}

pub fn sym_projector_on(factor_dims: &[usize], n: usize) -> Op {
    let perms = Permutation::all(n);
    let count = perms.len() as f64;
    let mut acc: Option<CMat> = None;
    for p in &perms {
        let m = perm_operator_on(p, factor_dims, n)
            .expect("permutation sized to n")
            .into_matrix();
        acc = Some(match acc {
            None => m,
            Some(a) => a + m,
        });
    }
    let matrix = acc.expect("at least one permutation").unscale(count);
    Op {
        layout: Layout::interleaved(factor_dims, n),
        matrix,
    }
}

/// `P₋ = 1 − P₊` on `(C^d)^{⊗2}`; only defined for two copies.
pub fn antisym_projector(d: usize, n: usize) -> Result<Op> {
    if n != 2 {
        return Err(Error::InvalidArgument(format!(
            "antisymmetric projector is only used at n = 2, got n = {n}"
        )));
    }
    let p = sym_projector(d, 2);
    let dim = p.dim();
    Ok(Op {
        layout: p.layout.clone(),
        matrix: linalg::identity(dim) - p.matrix,
    })
}

/// Trace out an arbitrary set of legs (by storage position).
pub fn trace_legs(m: &CMat, leg_dims: &[usize], traced: &[usize]) -> CMat {
    let st = strides(leg_dims);
    let kept: Vec<usize> = (0..leg_dims.len()).filter(|k| !traced.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| leg_dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| leg_dims[k]).collect();
    let offsets = |legs: &[usize], dims: &[usize]| -> Vec<usize> {
        let count: usize = dims.iter().product();
        let mut dig = vec![0; dims.len()];
        (0..count)
            .map(|i| {
                digits_of(i, dims, &mut dig);
                legs.iter().zip(&dig).map(|(&leg, &x)| x * st[leg]).sum()
            })
            .collect()
    };
    let kept_off = offsets(&kept, &kept_dims);
    let traced_off = offsets(traced, &traced_dims);
    let dout = kept_off.len();
    CMat::from_fn(dout, dout, |i, j| {
        traced_off.iter().map(|&t| m[(kept_off[i] + t, kept_off[j] + t)]).sum()
    })
}

/// Traces out every factor of copy `copy_index` (0-based).
pub fn partial_trace(m: &Op, copy_index: usize) -> Result<Op> {
    let shape = m
        .layout
        .as_single()
        .ok_or_else(|| Error::ShapeMismatch("partial_trace expects a single-block layout".into()))?;
    if copy_index >= shape.copies {
        return Err(Error::InvalidArgument(format!(
            "copy index {copy_index} out of range for {} copies",
            shape.copies
        )));
    }
    let legs = m.layout.legs();
    let leg_dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
    let traced: Vec<usize> = legs
        .iter()
        .enumerate()
        .filter(|(_, l)| l.copy == copy_index)
        .map(|(k, _)| k)
        .collect();
    let matrix = trace_legs(&m.matrix, &leg_dims, &traced);
    let out_layout = if shape.copies == 1 {
        Layout(vec![FactorShape {
            factor_dims: vec![1],
            copies: 1,
        }])
    } else {
        Layout::interleaved(&shape.factor_dims, shape.copies - 1)
    };
    Op::new(out_layout, matrix)
}

/// Storage-index map from `to` layout positions to `from` layout positions.
fn reorder_map(from: &Layout, to: &Layout) -> Result<Vec<usize>> {
    let from_legs = from.legs();
    let to_legs = to.legs();
    if from_legs.len() != to_legs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} legs vs {} legs",
            from_legs.len(),
            to_legs.len()
        )));
    }
    let mut source = Vec::with_capacity(to_legs.len());
    for t in &to_legs {
        let pos = from_legs
            .iter()
            .position(|f| f.subsystem == t.subsystem && f.copy == t.copy)
            .ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "leg (subsystem {}, copy {}) missing from source layout",
                    t.subsystem, t.copy
                ))
            })?;
        if from_legs[pos].dim != t.dim {
            return Err(Error::ShapeMismatch(format!(
                "leg (subsystem {}, copy {}) has dim {} vs {}",
                t.subsystem, t.copy, from_legs[pos].dim, t.dim
            )));
        }
        source.push(pos);
    }
    let from_dims: Vec<usize> = from_legs.iter().map(|l| l.dim).collect();
    let to_dims: Vec<usize> = to_legs.iter().map(|l| l.dim).collect();
    let from_st = strides(&from_dims);
    let total = to.total_dim();
    let mut dig = vec![0; to_dims.len()];
    Ok((0..total)
        .map(|i| {
            digits_of(i, &to_dims, &mut dig);
            dig.iter().zip(&source).map(|(&x, &pos)| x * from_st[pos]).sum()
        })
        .collect())
}

pub fn reorder_matrix(m: &CMat, from: &Layout, to: &Layout) -> Result<CMat> {
    let map = reorder_map(from, to)?;
    if m.nrows() != map.len() {
        return Err(Error::DimensionMismatch {
            expected: map.len(),
            got: m.nrows(),
        });
    }
    Ok(conjugate_by_index_map(m, &map))
}

pub fn reorder_vector(v: &CVec, from: &Layout, to: &Layout) -> Result<CVec> {
    let map = reorder_map(from, to)?;
    if v.len() != map.len() {
        return Err(Error::DimensionMismatch {
            expected: map.len(),
            got: v.len(),
        });
    }
    Ok(CVec::from_fn(map.len(), |i, _| v[map[i]]))
}

/// Conjugation by the basis permutation taking `m`'s layout to `to`.
pub fn factor_reorder(m: &Op, to: &Layout) -> Result<Op> {
    let matrix = reorder_matrix(&m.matrix, &m.layout, to)?;
    Op::new(to.clone(), matrix)
}

/// `0 ≤ f ≤ p` up to `tol` on the eigenvalues.
pub fn operator_interval_check(f: &CMat, p: &CMat, tol: f64) -> Result<bool> {
    if f.shape() != p.shape() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            got: f.nrows(),
        });
    }
    for m in [f, p] {
        let deviation = linalg::hermitian_deviation(m);
        if deviation > tol::HERMITIAN.max(tol) {
            return Err(Error::NotHermitian { deviation });
        }
    }
    let (low, high) = interval_margins(f, p);
    Ok(low >= -tol && high >= -tol)
}

/// `(λ_min(f), λ_min(p − f))`.
pub fn interval_margins(f: &CMat, p: &CMat) -> (f64, f64) {
    (linalg::min_eigenvalue(f), linalg::min_eigenvalue(&(p - f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, numerical_rank};

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn kron_identities() {
        let i2 = Op::identity(Layout::single(2, 1));
        let k = kron(&i2, &i2);
        assert_eq!(k.dim(), 4);
        assert!(max_abs_diff(k.matrix(), &linalg::identity(4)) < 1e-15);
        assert_eq!(k.layout().0.len(), 2);

        let p0 = Op::new(Layout::single(2, 1), Ket::basis(2, 0).projector()).unwrap();
        let p1 = Op::new(Layout::single(2, 1), Ket::basis(2, 1).projector()).unwrap();
        let p01 = kron(&p0, &p1);
        assert!(max_abs_diff(p01.matrix(), &Ket::basis(4, 1).projector()) < 1e-15);
    }

    #[test]
    fn swap_maps_01_to_10() {
        let swap = perm_operator(&Permutation::transposition(2, 0, 1), 2, 2).unwrap();
        let v = swap.matrix() * Ket::basis(4, 1).amplitudes();
        assert!((v - Ket::basis(4, 2).amplitudes()).norm() < 1e-15);
        let id = perm_operator(&Permutation::identity(3), 2, 3).unwrap();
        assert!(max_abs_diff(id.matrix(), &linalg::identity(8)) < 1e-15);
    }

    #[test]
    fn swap_trace_equals_d() {
        for d in 2..=4 {
            let swap = perm_operator(&Permutation::transposition(2, 0, 1), d, 2).unwrap();
            assert!((swap.trace().re - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_projector_rank_and_idempotence() {
        for d in 1..=4 {
            for n in 1..=3 {
                let p = sym_projector(d, n);
                let m = p.matrix();
                assert!(max_abs_diff(&(m * m), m) < 1e-12);
                assert!(linalg::hermitian_deviation(m) < 1e-12);
                assert_eq!(numerical_rank(m, 1e-9), binomial(d + n - 1, n));
            }
        }
        assert!(max_abs_diff(sym_projector(3, 1).matrix(), &linalg::identity(3)) < 1e-15);
    }

    #[test]
    fn antisym_projector_properties() {
        let pm = antisym_projector(2, 2).unwrap();
        assert_eq!(numerical_rank(pm.matrix(), 1e-9), 1);
        let singlet = Ket::from_real(&[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!(max_abs_diff(pm.matrix(), &singlet.projector()) < 1e-12);
        let pm3 = antisym_projector(3, 2).unwrap();
        assert_eq!(numerical_rank(pm3.matrix(), 1e-9), 3);
        let pp = sym_projector(3, 2);
        assert!(linalg::max_abs(&(pp.matrix() * pm3.matrix())) < 1e-12);
        assert!(antisym_projector(2, 3).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = CMat::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let b = CMat::from_fn(2, 2, |i, j| C64::new(1.0 + (i * j) as f64, 0.5));
        let ab = Op::new(Layout::single(2, 2), linalg::kron(&a, &b)).unwrap();
        let t2 = partial_trace(&ab, 1).unwrap();
        assert!(max_abs_diff(t2.matrix(), &(&a * b.trace())) < 1e-12);
        let t1 = partial_trace(&ab, 0).unwrap();
        assert!(max_abs_diff(t1.matrix(), &(&b * a.trace())) < 1e-12);
        assert!(partial_trace(&ab, 2).is_err());
    }

    #[test]
    fn reorder_round_trip_and_identity_case() {
        let m = CMat::from_fn(16, 16, |i, j| C64::new(i as f64, j as f64 * 0.1));
        let grouped = Layout::grouped(&[2, 2], 2);
        let inter = Layout::interleaved(&[2, 2], 2);
        let op = Op::new(grouped.clone(), m.clone()).unwrap();
        let there = factor_reorder(&op, &inter).unwrap();
        let back = factor_reorder(&there, &grouped).unwrap();
        assert!(max_abs_diff(back.matrix(), &m) < 1e-15);

        let one = Op::new(
            Layout::grouped(&[2, 3], 1),
            CMat::from_fn(6, 6, |i, j| C64::new((i * 6 + j) as f64, 0.0)),
        )
        .unwrap();
        let same = factor_reorder(&one, &Layout::interleaved(&[2, 3], 1)).unwrap();
        assert!(max_abs_diff(same.matrix(), one.matrix()) < 1e-15);

        assert!(factor_reorder(&op, &Layout::interleaved(&[4], 2)).is_err());
    }

    #[test]
    fn interval_check_cases() {
        let p = sym_projector(2, 2);
        let zero = CMat::zeros(4, 4);
        assert!(operator_interval_check(&zero, p.matrix(), 1e-9).unwrap());
        assert!(!operator_interval_check(&(p.matrix() * C64::new(2.0, 0.0)), p.matrix(), 1e-9).unwrap());
        let mut bad = zero.clone();
        bad[(0, 1)] = ONE;
        assert!(operator_interval_check(&bad, p.matrix(), 1e-9).is_err());
    }

    #[test]
    fn permutation_basics() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        let p = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        assert_eq!(p.cycle_type(), vec![3]);
        assert_eq!(p.sign(), 1);
        assert_eq!(p.compose(&p.inverse()), Permutation::identity(3));
        assert_eq!(Permutation::all(4).len(), 24);
    }
}
