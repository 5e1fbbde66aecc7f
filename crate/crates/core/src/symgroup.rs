//! Symmetric-group and SU(d) combinatorics.
//!
//! Characters are exact integers computed with the Murnaghan–Nakayama rule on
//! beta-sets. Matrices only appear when projectors are assembled from
//! permutation operators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::tensor::{self, Layout, Op, Permutation};

/// Weakly decreasing list of positive parts. The empty partition is allowed
/// and labels the trivial SU(d) irrep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        write!(f, "({})", body.join(","))
    }
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::InvalidArgument(format!("zero part in {parts:?}")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!("{parts:?} is not weakly decreasing")));
        }
        Ok(Partition { parts })
    }

    /// Drops zero parts; the remainder must still be weakly decreasing.
    pub fn from_padded(parts: &[usize]) -> Result<Self> {
        Partition::new(parts.iter().copied().filter(|&p| p > 0).collect())
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Part `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        let width = self.part(0);
        Partition {
            parts: (0..width)
                .map(|c| self.parts.iter().filter(|&&p| p > c).count())
                .collect(),
        }
    }

    /// Dimension of the Specht module `S_λ`.
    pub fn sn_dim(&self) -> u64 {
        let n = self.weight();
        let identity = Partition { parts: vec![1; n] };
        mn_character(self, &identity).expect("equal weights") as u64
    }

    fn contains(&self, other: &Partition) -> bool {
        other.len() <= self.len() && (0..other.len()).all(|i| self.part(i) >= other.part(i))
    }
}

/// All partitions of `n`, in decreasing lexicographic order.
pub fn partitions(n: usize) -> Vec<Partition> {
    fn rec(remaining: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition { parts: prefix.clone() });
            return;
        }
        for p in (1..=remaining.min(max)).rev() {
            prefix.push(p);
            rec(remaining - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

type CharKey = (Vec<usize>, Vec<usize>);

fn char_memo() -> &'static Mutex<HashMap<CharKey, i64>> {
    static MEMO: OnceLock<Mutex<HashMap<CharKey, i64>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn character_rec(lambda: &[usize], mu: &[usize]) -> i64 {
    if mu.is_empty() {
        return if lambda.is_empty() { 1 } else { 0 };
    }
    let key = (lambda.to_vec(), mu.to_vec());
    if let Some(&v) = char_memo().lock().expect("memo lock").get(&key) {
        return v;
    }
    let r = mu[0];
    let len = lambda.len();
    let beta: Vec<usize> = (0..len).map(|i| lambda[i] + (len - 1 - i)).collect();
    let mut total = 0i64;
    for (k, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let target = b - r;
        let crossed = beta.iter().filter(|&&x| x > target && x < b).count();
        let sign = if crossed % 2 == 0 { 1 } else { -1 };
        let mut next = beta.clone();
        next[k] = target;
        next.sort_unstable_by(|a, b| b.cmp(a));
        let reduced: Vec<usize> = (0..len).map(|i| next[i] - (len - 1 - i)).filter(|&p| p > 0).collect();
        total += sign * character_rec(&reduced, &mu[1..]);
    }
    char_memo().lock().expect("memo lock").insert(key, total);
    total
}

/// `χ_λ` on the class of cycle type `μ`.
pub fn mn_character(lambda: &Partition, class_mu: &Partition) -> Result<i64> {
    if lambda.weight() != class_mu.weight() {
        return Err(Error::WeightMismatch(lambda.weight(), class_mu.weight()));
    }
    Ok(character_rec(&lambda.parts, &class_mu.parts))
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// `n! / z_μ`.
pub fn class_size(mu: &Partition) -> u64 {
    let mut z = 1u64;
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &p in &mu.parts {
        *counts.entry(p).or_default() += 1;
    }
    for (&part, &m) in &counts {
        z *= (part as u64).pow(m as u32) * factorial(m as usize);
    }
    factorial(mu.weight()) / z
}

/// Rows are irreps, columns classes; both indexed by `partitions(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CharacterTable {
    pub n: usize,
    pub partitions: Vec<Partition>,
    pub class_sizes: Vec<u64>,
    pub entries: Vec<Vec<i64>>,
}

impl CharacterTable {
    pub fn new(n: usize) -> Self {
        let parts = partitions(n);
        let class_sizes = parts.iter().map(class_size).collect();
        let entries = parts
            .iter()
            .map(|l| parts.iter().map(|m| character_rec(&l.parts, &m.parts)).collect())
            .collect();
        CharacterTable {
            n,
            partitions: parts,
            class_sizes,
            entries,
        }
    }

    /// `Σ_classes |C| χ_i χ_j`; equals `n! δ_ij`.
    pub fn inner(&self, i: usize, j: usize) -> i64 {
        (0..self.partitions.len())
            .map(|c| self.class_sizes[c] as i64 * self.entries[i][c] * self.entries[j][c])
            .sum()
    }
}

/// `Π_λ = (dim S_λ / n!) Σ_π χ_λ(π) π` on `(C^{d₁}⊗…⊗C^{d_k})^{⊗n}`, with
/// the copy permutations moving every subsystem together.
pub fn isotypic_projector_on(lambda: &Partition, factor_dims: &[usize], n: usize) -> Result<Op> {
    if lambda.weight() != n {
        return Err(Error::WeightMismatch(lambda.weight(), n));
    }
    let local: usize = factor_dims.iter().product();
    let total = local.pow(n as u32);
    let mut acc = CMat::zeros(total, total);
    for pi in Permutation::all(n) {
        let cycle = Partition::new(pi.cycle_type())?;
        let chi = mn_character(lambda, &cycle)?;
        if chi != 0 {
            let op = tensor::perm_operator_on(&pi, factor_dims, n)?;
            acc += op.matrix() * C64::new(chi as f64, 0.0);
        }
    }
    let scale = lambda.sn_dim() as f64 / factorial(n) as f64;
    Op::new(Layout::interleaved(factor_dims, n), acc * C64::new(scale, 0.0))
}

pub fn isotypic_projector(lambda: &Partition, d: usize, n: usize) -> Result<Op> {
    isotypic_projector_on(lambda, &[d], n)
}

fn joint_block_projector(labels: &[&Partition], dims: &[usize], n: usize) -> Result<Op> {
    for l in labels {
        if l.weight() != n {
            return Err(Error::WeightMismatch(l.weight(), n));
        }
    }
    let mut grouped: Option<Op> = None;
    for (l, &d) in labels.iter().zip(dims) {
        let p = isotypic_projector(l, d, n)?;
        grouped = Some(match grouped {
            None => p,
            Some(g) => tensor::kron(&g, &p),
        });
    }
    let grouped = grouped.ok_or_else(|| Error::InvalidArgument("no subsystems".into()))?;
    let interleaved = tensor::factor_reorder(&grouped, &Layout::interleaved(dims, n))?;
    let sym = tensor::sym_projector_on(dims, n);
    Op::new(interleaved.layout().clone(), interleaved.matrix() * sym.matrix())
}

/// `Q_λ = (Π_λ^A ⊗ Π_λ^B) P₊^{AB}` on `(C^a ⊗ C^b)^{⊗n}` (interleaved layout).
pub fn q_lambda(lambda: &Partition, a: usize, b: usize, n: usize) -> Result<Op> {
    joint_block_projector(&[lambda, lambda], &[a, b], n)
}

/// `Q_{λμν} = (Π_λ^A ⊗ Π_μ^B ⊗ Π_ν^C) P₊^{ABC}` (interleaved layout).
pub fn q_lambda_mu_nu(
    lambda: &Partition,
    mu: &Partition,
    nu: &Partition,
    a: usize,
    b: usize,
    c: usize,
    n: usize,
) -> Result<Op> {
    joint_block_projector(&[lambda, mu, nu], &[a, b, c], n)
}

/// Multiplicity of the trivial irrep in `S_λ ⊗ S_μ ⊗ S_ν`.
pub fn kronecker_coefficient(lambda: &Partition, mu: &Partition, nu: &Partition) -> Result<u64> {
    let n = lambda.weight();
    for p in [mu, nu] {
        if p.weight() != n {
            return Err(Error::WeightMismatch(n, p.weight()));
        }
    }
    let sum: i64 = partitions(n)
        .iter()
        .map(|c| {
            class_size(c) as i64
                * character_rec(&lambda.parts, &c.parts)
                * character_rec(&mu.parts, &c.parts)
                * character_rec(&nu.parts, &c.parts)
        })
        .sum();
    let nf = factorial(n) as i64;
    debug_assert_eq!(sum % nf, 0);
    Ok((sum / nf) as u64)
}

/// Hook-content formula for the SU(d) irrep with highest weight `λ`.
pub fn su_dim(lambda: &Partition, d: usize) -> Result<u64> {
    if lambda.len() > d {
        return Err(Error::TooManyParts(lambda.to_string(), d));
    }
    let conj = lambda.conjugate();
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for (i, &row) in lambda.parts.iter().enumerate() {
        for j in 0..row {
            num *= (d + j - i) as u128;
            den *= ((row - j) + (conj.part(j) - i) - 1) as u128;
        }
    }
    Ok((num / den) as u64)
}

/// Quadratic Casimir of the SU(d) irrep `λ`, normalized by `tr(T_a T_b) = δ_ab`
/// in the defining representation.
pub fn su_casimir(lambda: &Partition, d: usize) -> f64 {
    let w = lambda.weight() as f64;
    let body: f64 = lambda
        .parts
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let l = l as f64;
            l * (l + d as f64 + 1.0 - 2.0 * (i as f64 + 1.0))
        })
        .sum();
    body - w * w / d as f64
}

/// Partitions `ν ⊇ λ` with `|ν| = |λ| + extra` and at most `max_len` parts.
fn supersets(lambda: &Partition, extra: usize, max_len: usize) -> Vec<Partition> {
    partitions(lambda.weight() + extra)
        .into_iter()
        .filter(|nu| nu.len() <= max_len && nu.contains(lambda))
        .collect()
}

/// Number of LR tableaux of shape `ν/λ` and weight `μ`.
pub fn lr_coefficient(lambda: &Partition, mu: &Partition, nu: &Partition) -> u64 {
    if nu.weight() != lambda.weight() + mu.weight() || !nu.contains(lambda) {
        return 0;
    }
    // Cells in reading order: rows top to bottom, each row right to left.
    let mut cells = Vec::new();
    for r in 0..nu.len() {
        for c in (lambda.part(r)..nu.part(r)).rev() {
            cells.push((r, c));
        }
    }
    let mut filling: HashMap<(usize, usize), usize> = HashMap::new();
    let mut counts = vec![0usize; mu.len() + 1];

    fn rec(
        k: usize,
        cells: &[(usize, usize)],
        mu: &Partition,
        filling: &mut HashMap<(usize, usize), usize>,
        counts: &mut Vec<usize>,
    ) -> u64 {
        if k == cells.len() {
            return 1;
        }
        let (r, c) = cells[k];
        let mut total = 0;
        for v in 1..=mu.len() {
            if counts[v] >= mu.part(v - 1) {
                continue;
            }
            if v > 1 && counts[v] + 1 > counts[v - 1] {
                continue;
            }
            if let Some(&right) = filling.get(&(r, c + 1)) {
                if v > right {
                    continue;
                }
            }
            if r > 0 {
                if let Some(&above) = filling.get(&(r - 1, c)) {
                    if v <= above {
                        continue;
                    }
                }
            }
            filling.insert((r, c), v);
            counts[v] += 1;
            total += rec(k + 1, cells, mu, filling, counts);
            counts[v] -= 1;
            filling.remove(&(r, c));
        }
        total
    }

    rec(0, &cells, mu, &mut filling, &mut counts)
}

fn reduce_su(nu: &Partition, d: usize) -> Partition {
    let drop = if nu.len() == d { nu.part(d - 1) } else { 0 };
    Partition {
        parts: nu.parts.iter().map(|&p| p - drop).filter(|&p| p > 0).collect(),
    }
}

/// `V_λ ⊗ V_μ` for SU(d) as (irrep, multiplicity) pairs, sorted by partition.
pub fn lr_decompose(lambda: &Partition, mu: &Partition, d: usize) -> Result<Vec<(Partition, u64)>> {
    for p in [lambda, mu] {
        if p.len() > d {
            return Err(Error::TooManyParts(p.to_string(), d));
        }
    }
    let mut out: BTreeMap<Partition, u64> = BTreeMap::new();
    for nu in supersets(lambda, mu.weight(), d) {
        let m = lr_coefficient(lambda, mu, &nu);
        if m > 0 {
            *out.entry(reduce_su(&nu, d)).or_default() += m;
        }
    }
    Ok(out.into_iter().collect())
}

/// `λ*_i = λ₁ − λ_{d+1−i}`: highest weight of the dual SU(d) irrep.
pub fn dual_partition(lambda: &Partition, d: usize) -> Result<Partition> {
    if lambda.len() > d {
        return Err(Error::TooManyParts(lambda.to_string(), d));
    }
    let top = lambda.part(0);
    let parts: Vec<usize> = (1..=d).map(|i| top - lambda.part(d - i)).collect();
    Partition::from_padded(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_diff, numerical_rank};

    fn p(parts: &[usize]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn partition_listing() {
        assert_eq!(partitions(2), vec![p(&[2]), p(&[1, 1])]);
        assert_eq!(partitions(3), vec![p(&[3]), p(&[2, 1]), p(&[1, 1, 1])]);
        assert_eq!(partitions(6).len(), 11);
        assert!(Partition::new(vec![1, 2]).is_err());
    }

    #[test]
    fn small_characters() {
        assert_eq!(mn_character(&p(&[3]), &p(&[2, 1])).unwrap(), 1);
        assert_eq!(mn_character(&p(&[1, 1]), &p(&[2])).unwrap(), -1);
        assert_eq!(mn_character(&p(&[2, 1]), &p(&[1, 1, 1])).unwrap(), 2);
        assert_eq!(mn_character(&p(&[2, 1]), &p(&[3])).unwrap(), -1);
        assert_eq!(mn_character(&p(&[2, 2]), &p(&[2, 2])).unwrap(), 2);
        assert!(mn_character(&p(&[2]), &p(&[1])).is_err());
    }

    #[test]
    fn orthogonality_and_dimension_sum() {
        for n in 1..=6 {
            let t = CharacterTable::new(n);
            let nf = factorial(n) as i64;
            for i in 0..t.partitions.len() {
                for j in 0..t.partitions.len() {
                    assert_eq!(t.inner(i, j), if i == j { nf } else { 0 });
                }
            }
            let s: u64 = t.partitions.iter().map(|l| l.sn_dim().pow(2)).sum();
            assert_eq!(s, nf as u64);
        }
    }

    #[test]
    fn isotypic_projectors() {
        let sym = isotypic_projector(&p(&[3]), 2, 3).unwrap();
        assert!(max_abs_diff(sym.matrix(), tensor::sym_projector(2, 3).matrix()) < 1e-12);
        let mut sum = CMat::zeros(8, 8);
        for l in partitions(3) {
            sum += isotypic_projector(&l, 2, 3).unwrap().matrix();
        }
        assert!(max_abs_diff(&sum, &identity(8)) < 1e-12);
        let zero = isotypic_projector(&p(&[1, 1, 1]), 2, 3).unwrap();
        assert!(crate::linalg::max_abs(zero.matrix()) < 1e-12);
        let ps: Vec<Op> = partitions(3)
            .iter()
            .map(|l| isotypic_projector(l, 3, 3).unwrap())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let prod = ps[i].matrix() * ps[j].matrix();
                let expect = if i == j {
                    ps[i].matrix().clone()
                } else {
                    CMat::zeros(27, 27)
                };
                assert!(max_abs_diff(&prod, &expect) < 1e-12);
            }
        }
    }

    #[test]
    fn q_lambda_examples() {
        let q = q_lambda(&p(&[1, 1]), 2, 4, 2).unwrap();
        assert_eq!(numerical_rank(q.matrix(), 1e-9), 6);
        let single = q_lambda(&p(&[1]), 2, 3, 1).unwrap();
        assert!(max_abs_diff(single.matrix(), &identity(6)) < 1e-12);
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_coefficient(&p(&[1, 1]), &p(&[1, 1]), &p(&[2])).unwrap(), 1);
        assert_eq!(kronecker_coefficient(&p(&[2, 1]), &p(&[2, 1]), &p(&[2, 1])).unwrap(), 1);
        assert_eq!(kronecker_coefficient(&p(&[3]), &p(&[2, 1]), &p(&[1, 1, 1])).unwrap(), 0);
    }

    #[test]
    fn su_dimensions() {
        assert_eq!(su_dim(&p(&[1]), 5).unwrap(), 5);
        assert_eq!(su_dim(&p(&[2]), 2).unwrap(), 3);
        assert_eq!(su_dim(&p(&[2, 1]), 3).unwrap(), 8);
        assert_eq!(su_dim(&Partition::empty(), 4).unwrap(), 1);
        assert!(su_dim(&p(&[1, 1, 1]), 2).is_err());
    }

    #[test]
    fn casimir_values() {
        assert!((su_casimir(&p(&[1]), 2) - 1.5).abs() < 1e-14);
        assert!((su_casimir(&p(&[2]), 2) - 4.0).abs() < 1e-14);
        assert!((su_casimir(&p(&[4, 2, 2]), 4) - 20.0).abs() < 1e-12);
        assert!(su_casimir(&Partition::empty(), 3).abs() < 1e-14);
    }

    #[test]
    fn lr_examples() {
        let out = lr_decompose(&p(&[1]), &p(&[1]), 3).unwrap();
        assert_eq!(out, vec![(p(&[1, 1]), 1), (p(&[2]), 1)]);
        assert_eq!(lr_coefficient(&p(&[2, 1]), &p(&[2, 1]), &p(&[3, 2, 1])), 2);
        let su2 = lr_decompose(&p(&[1]), &p(&[1]), 2).unwrap();
        assert_eq!(su2, vec![(Partition::empty(), 1), (p(&[2]), 1)]);
    }

    #[test]
    fn duals() {
        assert_eq!(dual_partition(&p(&[2, 1]), 4).unwrap(), p(&[2, 2, 1]));
        assert_eq!(dual_partition(&p(&[1, 1]), 2).unwrap(), Partition::empty());
        assert_eq!(dual_partition(&p(&[1]), 3).unwrap(), p(&[1, 1]));
    }
}
