//! SU(d) structure of the symmetric operator spaces `M_n^d`.
//!
//! `M_n^d` splits into multiplicity-free irreps `N_j^d`, `j = 0..n`, under
//! `M ↦ U^{⊗n} M U^{†⊗n}`. Blocks are built numerically as orbit spans of the
//! generators `N_{j,n}` and labelled by the eigenvalue of the quadratic
//! Casimir of the conjugation action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, SpanBuilder, C64};
use crate::opf::{symmetric_isometry, MnElement};
use crate::random::{haar_unitary, trial_rng};
use crate::symgroup::{self, Partition};
use crate::tensor::{self, Ket, Op};
use crate::theories::StarProduct;
use crate::tol;

const BATCH: usize = 8;
const STABLE_BATCHES: usize = 3;
/// Default cap on orbit samples before giving up.
pub const DEFAULT_SAMPLE_CAP: usize = 4096;
/// Relative tolerance used to decide whether a Casimir value is present.
pub const CASIMIR_MATCH_TOL: f64 = 1e-6;

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `dim M_n^d = binom(d+n-1, n)²`.
pub fn dim_mn(d: usize, n: usize) -> u64 {
    binomial((d + n - 1) as u64, n as u64).pow(2)
}

/// `dim N_n^d = binom(d+n-2, n)² (2n+d-1)/(d-1)`, with `dim N_0^d = 1`.
pub fn dim_nn(d: usize, n: usize) -> u64 {
    assert!(d >= 2, "dim_nn needs d >= 2");
    if n == 0 {
        return 1;
    }
    let b = binomial((d + n - 2) as u64, n as u64);
    b * b * (2 * n + d - 1) as u64 / (d - 1) as u64
}

/// HS-orthonormal basis of `M_n^d`: `V|k⟩⟨l|V†` for an isometry `V` onto the
/// symmetric subspace.
pub fn symmetric_operator_basis(d: usize, n: usize) -> Vec<MnElement> {
    let v = symmetric_isometry(d, n);
    let m = v.ncols();
    let mut out = Vec::with_capacity(m * m);
    for l in 0..m {
        for k in 0..m {
            let mat = v.column(k) * v.column(l).adjoint();
            out.push(MnElement::new_unchecked(d, n, mat));
        }
    }
    out
}

/// `N_{j,n} = P₊ (|0⟩⟨1|^{⊗j} ⊗ 1^{⊗(n−j)}) P₊`.
pub fn generator_njn(j: usize, n: usize, d: usize) -> Result<MnElement> {
    if j > n || d < 2 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "generator needs 0 <= j <= n, d >= 2 (j={j}, n={n}, d={d})"
        )));
    }
    let mut flip = CMat::zeros(d, d);
    flip[(0, 1)] = C64::new(1.0, 0.0);
    let mut core = CMat::identity(1, 1);
    for k in 0..n {
        let factor = if k < j { flip.clone() } else { linalg::identity(d) };
        core = linalg::kron(&core, &factor);
    }
    MnElement::project(d, n, &core)
}

/// HS-orthonormal basis of an invariant subspace of `M_n^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepBlock {
    pub j: Option<usize>,
    pub d: usize,
    pub n: usize,
    pub basis: Vec<MnElement>,
}

impl IrrepBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn span(&self) -> SpanBuilder {
        let mut s = SpanBuilder::new(tol::RANK);
        for b in &self.basis {
            s.push(&linalg::flatten(b.matrix()));
        }
        s
    }

    /// Norm of the orthogonal projection of `m` onto the block.
    pub fn overlap(&self, m: &CMat) -> f64 {
        self.basis
            .iter()
            .map(|b| linalg::hs_inner(b.matrix(), m).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// HS distance from `m` to the block.
    pub fn distance(&self, m: &CMat) -> f64 {
        self.span().distance(&linalg::flatten(m))
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, x) in self.basis.iter().enumerate() {
            for (k, y) in self.basis.iter().enumerate() {
                let target = if i == k { 1.0 } else { 0.0 };
                dev = dev.max((linalg::hs_inner(x.matrix(), y.matrix()) - C64::new(target, 0.0)).norm());
            }
        }
        dev
    }
}

fn conjugate_power(u: &CMat, n: usize, m: &CMat) -> CMat {
    let un = linalg::tensor_power(u, n);
    &un * m * un.adjoint()
}

/// Orthonormal basis of `span{U^{⊗n} M U^{†⊗n}}` over seeded Haar samples;
/// stops once three consecutive batches of eight samples add no rank.
pub fn orbit_span(m: &MnElement, sample_cap: usize, seed: u64) -> Result<IrrepBlock> {
    if linalg::max_abs(m.matrix()) == 0.0 {
        return Err(Error::InvalidArgument("orbit of the zero element".into()));
    }
    let (d, n) = (m.d(), m.n());
    let mut span = SpanBuilder::new(tol::RANK);
    span.push(&linalg::flatten(m.matrix()));
    let mut rng = trial_rng(seed, 0);
    let mut samples = 0;
    let mut quiet = 0;
    while quiet < STABLE_BATCHES {
        if samples >= sample_cap {
            return Err(Error::RankNotStabilized {
                samples,
                rank: span.rank(),
            });
        }
        let mut grew = false;
        for _ in 0..BATCH {
            let u = haar_unitary(&mut rng, d);
            grew |= span.push(&linalg::flatten(&conjugate_power(&u, n, m.matrix())));
        }
        samples += BATCH;
        quiet = if grew { 0 } else { quiet + 1 };
    }
    let dim = d.pow(n as u32);
    let basis = span
        .into_basis()
        .into_iter()
        .map(|v| MnElement::new_unchecked(d, n, linalg::unflatten(&v, dim, dim)))
        .collect();
    Ok(IrrepBlock { j: None, d, n, basis })
}

/// Blocks `j = 0..n` of `M_n^d`, each the orbit span of `N_{j,n}`.
pub fn decompose_mn(d: usize, n: usize, seed: u64) -> Result<Vec<IrrepBlock>> {
    (0..=n)
        .map(|j| {
            let g = generator_njn(j, n, d)?;
            let mut block = orbit_span(&g, DEFAULT_SAMPLE_CAP, seed.wrapping_add(j as u64))?;
            block.j = Some(j);
            Ok(block)
        })
        .collect()
}

/// Orthonormal Hermitian basis of su(d), `tr(T_a T_b) = δ_ab`.
pub fn su_basis(d: usize) -> Vec<CMat> {
    let s = 1.0 / 2f64.sqrt();
    let mut out = Vec::with_capacity(d * d - 1);
    for k in 0..d {
        for l in (k + 1)..d {
            let mut x = CMat::zeros(d, d);
            x[(k, l)] = C64::new(s, 0.0);
            x[(l, k)] = C64::new(s, 0.0);
            let mut y = CMat::zeros(d, d);
            y[(k, l)] = C64::new(0.0, -s);
            y[(l, k)] = C64::new(0.0, s);
            out.push(x);
            out.push(y);
        }
    }
    for m in 1..d {
        let norm = 1.0 / ((m * (m + 1)) as f64).sqrt();
        let mut h = CMat::zeros(d, d);
        for k in 0..m {
            h[(k, k)] = C64::new(norm, 0.0);
        }
        h[(m, m)] = C64::new(-(m as f64) * norm, 0.0);
        out.push(h);
    }
    out
}

/// `C₂(M) = Σ_a [ΔT_a, [ΔT_a, M]]`, where `ΔT_a` applies `T_a` to one chosen
/// subsystem of every copy.
#[derive(Debug, Clone)]
pub struct CasimirMap {
    generators: Vec<CMat>,
    dim: usize,
}

impl CasimirMap {
    /// Conjugation action on `M_n^d`.
    pub fn new(d: usize, n: usize) -> Self {
        Self::local(&[d], 0, n)
    }

    /// Action of SU(`factor_dims[subsystem]`) on `(⊗_k C^{d_k})^{⊗n}` stored
    /// interleaved.
    pub fn local(factor_dims: &[usize], subsystem: usize, n: usize) -> Self {
        let d = factor_dims[subsystem];
        let before: usize = factor_dims[..subsystem].iter().product();
        let after: usize = factor_dims[subsystem + 1..].iter().product();
        let local: usize = factor_dims.iter().product();
        let dim = local.pow(n as u32);
        let generators = su_basis(d)
            .iter()
            .map(|t| {
                let one_copy = linalg::kron(&linalg::kron(&linalg::identity(before), t), &linalg::identity(after));
                let mut total = CMat::zeros(dim, dim);
                for copy in 0..n {
                    let left = linalg::identity(local.pow(copy as u32));
                    let right = linalg::identity(local.pow((n - 1 - copy) as u32));
                    total += linalg::kron(&linalg::kron(&left, &one_copy), &right);
                }
                total
            })
            .collect();
        CasimirMap { generators, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for t in &self.generators {
            let inner = t * m - m * t;
            out += t * &inner - &inner * t;
        }
        out
    }

    /// Commutator of `C₂` with conjugation by `V`: `‖C₂(V M V†) − V C₂(M) V†‖`.
    pub fn equivariance_gap(&self, v: &CMat, m: &CMat) -> f64 {
        let lhs = self.apply(&(v * m * v.adjoint()));
        let rhs = v * self.apply(m) * v.adjoint();
        linalg::max_abs_diff(&lhs, &rhs)
    }
}

/// Matrix of `C₂` on an orthonormal family and the norm of the part of
/// `C₂(basis)` leaking outside the family.
pub fn restricted_casimir(map: &CasimirMap, basis: &[CMat]) -> (CMat, f64) {
    let k = basis.len();
    let mut c = CMat::zeros(k, k);
    let mut leak: f64 = 0.0;
    for (l, b) in basis.iter().enumerate() {
        let image = map.apply(b);
        let mut inside = CMat::zeros(image.nrows(), image.ncols());
        for (r, e) in basis.iter().enumerate() {
            let coeff = linalg::hs_inner(e, &image);
            c[(r, l)] = coeff;
            inside += e * coeff;
        }
        leak = leak.max(linalg::hs_norm(&(image - inside)));
    }
    (c, leak)
}

/// Groups sorted eigenvalues into (value, multiplicity) clusters.
pub fn cluster_eigenvalues(values: &[f64], rel_tol: f64) -> Vec<(f64, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((mean, count, sum)) if (v - *mean).abs() <= rel_tol * mean.abs().max(1.0) => {
                *count += 1;
                *sum += v;
                *mean = *sum / *count as f64;
            }
            _ => out.push((v, 1, v)),
        }
    }
    out.into_iter().map(|(m, c, _)| (m, c)).collect()
}

/// Calibrated Casimir values per block and the clustered spectrum of `C₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasimirSpectrum {
    pub d: usize,
    pub n: usize,
    pub eigenvalues: Vec<(f64, usize)>,
    pub calibration: Vec<(usize, f64)>,
    /// Largest relative deviation of `C₂` from a scalar on any block.
    pub block_deviation: f64,
}

impl CasimirSpectrum {
    pub fn value(&self, j: usize) -> Option<f64> {
        self.calibration.iter().find(|(k, _)| *k == j).map(|&(_, v)| v)
    }

    /// Calibration values are pairwise distinct at relative separation `rel`.
    pub fn is_injective(&self, rel: f64) -> bool {
        let vals: Vec<f64> = self.calibration.iter().map(|&(_, v)| v).collect();
        vals.iter().enumerate().all(|(i, &x)| {
            vals[i + 1..]
                .iter()
                .all(|&y| (x - y).abs() > rel * x.abs().max(y.abs()).max(1.0))
        })
    }
}

/// Scalar value of `C₂` on a block and its relative deviation from a scalar
/// (including leakage out of the block).
pub fn block_casimir(map: &CasimirMap, block: &IrrepBlock) -> (f64, f64) {
    let mats: Vec<CMat> = block.basis.iter().map(|b| b.matrix().clone()).collect();
    let (c, leak) = restricted_casimir(map, &mats);
    let k = c.nrows();
    let value = c.trace().re / k as f64;
    let scalar = linalg::identity(k) * C64::new(value, 0.0);
    let dev = linalg::max_abs_diff(&c, &scalar).max(leak) / value.abs().max(1.0);
    (value, dev)
}

pub fn casimir_calibrate(d: usize, n: usize, seed: u64) -> Result<CasimirSpectrum> {
    let blocks = decompose_mn(d, n, seed)?;
    let map = CasimirMap::new(d, n);
    let mut calibration = Vec::new();
    let mut block_deviation: f64 = 0.0;
    let mut eigen = Vec::new();
    for b in &blocks {
        let (value, dev) = block_casimir(&map, b);
        calibration.push((b.j.expect("decomposition labels blocks"), value));
        block_deviation = block_deviation.max(dev);
        eigen.extend(std::iter::repeat_n(value, b.dim()));
    }
    Ok(CasimirSpectrum {
        d,
        n,
        eigenvalues: cluster_eigenvalues(&eigen, 1e-8),
        calibration,
        block_deviation,
    })
}

/// Norm of the projection of `Ω_ψ = (|ψ⟩⟨ψ|)^{⊗n}` onto each block.
pub fn omega_support_check(psi: &Ket, blocks: &[IrrepBlock]) -> Result<Vec<f64>> {
    blocks
        .iter()
        .map(|b| {
            if b.d != psi.dim() {
                return Err(Error::DimensionMismatch {
                    expected: b.d,
                    got: psi.dim(),
                });
            }
            let omega = linalg::outer(&psi.tensor_power(b.n));
            Ok(b.overlap(&omega))
        })
        .collect()
}

/// `|tr(N_{j,n} Ω_ψ)|`.
pub fn generator_overlap(psi: &Ket, j: usize, n: usize) -> Result<f64> {
    Ok(generator_njn(j, n, psi.dim())?.pair_with(psi)?.norm())
}

/// One row of the partial-trace kernel check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub j: usize,
    /// Largest image norm (meaningful for `j = n`, which must be annihilated).
    pub image_norm: f64,
    /// Largest distance of an image from the degree-(n−1) block `j`.
    pub outside_block: f64,
    pub image_rank: usize,
    pub block_dim: usize,
}

/// `tr_n` on every block of `M_n^d` against the blocks of `M_{n−1}^d`.
pub fn kernel_lemma(d: usize, n: usize, seed: u64) -> Result<Vec<KernelRow>> {
    if n < 2 {
        return Err(Error::InvalidArgument("kernel check needs n >= 2".into()));
    }
    let upper = decompose_mn(d, n, seed)?;
    let lower = decompose_mn(d, n - 1, seed)?;
    let mut rows = Vec::new();
    for block in &upper {
        let j = block.j.expect("labelled");
        let mut images = SpanBuilder::new(tol::RANK);
        let mut image_norm: f64 = 0.0;
        let mut outside: f64 = 0.0;
        for b in &block.basis {
            let reduced = tensor::partial_trace(&b.as_op(), n - 1)?.into_matrix();
            image_norm = image_norm.max(linalg::hs_norm(&reduced));
            if j < n {
                outside = outside.max(lower[j].distance(&reduced));
            }
            images.push(&linalg::flatten(&reduced));
        }
        let image_rank = if image_norm < 1e-10 { 0 } else { images.rank() };
        rows.push(KernelRow {
            j,
            image_norm,
            outside_block: outside,
            image_rank,
            block_dim: block.dim(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeAssertion {
    pub name: String,
    /// Subsystem whose Casimir is inspected.
    pub side: String,
    pub target_value: f64,
    pub expect_present: bool,
    pub observed_present: bool,
    pub span_rank: usize,
    pub spectrum: Vec<(f64, usize)>,
    /// Norm of `C₂(span)` leaking outside the span; small for invariant spans.
    pub leakage: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: String,
    pub star: String,
    pub dims: Vec<usize>,
    pub seed: u64,
    /// Rank of the block projector used to cut the span.
    pub projector_rank: usize,
    pub calibration: Vec<(usize, usize, f64)>,
    pub assertions: Vec<ProbeAssertion>,
}

impl ProbeReport {
    pub fn all_passed(&self) -> bool {
        self.projector_rank > 0 && self.assertions.iter().all(|a| a.passed)
    }
}

/// Orthonormal basis of the span of `elements` with a stability check
/// between two rank tolerances.
fn stable_span(elements: &[CMat]) -> Result<Vec<CMat>> {
    let mut strict = SpanBuilder::new(tol::RANK);
    let mut loose = SpanBuilder::new(tol::RANK * 100.0);
    for m in elements {
        let v = linalg::flatten(m);
        strict.push(&v);
        loose.push(&v);
    }
    if strict.rank() != loose.rank() {
        return Err(Error::RankUnstable(strict.rank(), loose.rank()));
    }
    let dim = elements.first().map_or(0, |m| m.nrows());
    Ok(strict
        .into_basis()
        .into_iter()
        .map(|v: CVec| linalg::unflatten(&v, dim, dim))
        .collect())
}

fn assess(
    name: &str,
    side: &str,
    elements: &[CMat],
    map: &CasimirMap,
    target: f64,
    expect_present: bool,
) -> Result<ProbeAssertion> {
    let basis = stable_span(elements)?;
    let (c, leakage) = restricted_casimir(map, &basis);
    let eig = linalg::hermitian_eigenvalues(&c);
    let observed_present = eig
        .iter()
        .any(|&x| (x - target).abs() <= CASIMIR_MATCH_TOL * target.abs().max(1.0));
    Ok(ProbeAssertion {
        name: name.to_string(),
        side: side.to_string(),
        target_value: target,
        expect_present,
        observed_present,
        span_rank: basis.len(),
        spectrum: cluster_eigenvalues(&eig, 1e-8),
        leakage,
        passed: observed_present == expect_present && leakage < 1e-8,
    })
}

fn require_degree_two(star: &dyn StarProduct) -> Result<()> {
    if star.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            got: star.degree(),
        });
    }
    Ok(())
}

fn sandwich(q: &Op, m: &MnElement) -> CMat {
    q.matrix() * m.matrix() * q.matrix()
}

fn top_value(d: usize, seed: u64) -> Result<f64> {
    let spectrum = casimir_calibrate(d, 2, seed)?;
    spectrum
        .value(2)
        .ok_or_else(|| Error::InvalidArgument("calibration lacks j = 2".into()))
}

/// Bipartite probe at degree 2: the B-side `j = 2` Casimir value must be
/// absent from `Q_{(1,1)} [u_A ⋆ M_2^b] Q_{(1,1)}` and present in the
/// unprojected span `u_A ⋆ M_2^b`.
pub fn licit_probe(star: &dyn StarProduct, a: usize, b: usize, seed: u64) -> Result<ProbeReport> {
    require_degree_two(star)?;
    let q = symgroup::q_lambda(&Partition::new(vec![1, 1])?, a, b, 2)?;
    let ua = MnElement::unit(a, 2);
    let raw: Vec<MnElement> = symmetric_operator_basis(b, 2)
        .iter()
        .map(|g| star.star_element(&ua, g))
        .collect::<Result<_>>()?;
    let projected: Vec<CMat> = raw.iter().map(|x| sandwich(&q, x)).collect();
    let control: Vec<CMat> = raw.into_iter().map(MnElement::into_matrix).collect();
    let target = top_value(b, seed)?;
    let map = CasimirMap::local(&[a, b], 1, 2);
    Ok(ProbeReport {
        kind: "licit".into(),
        star: star.name().into(),
        dims: vec![a, b],
        seed,
        projector_rank: linalg::numerical_rank(q.matrix(), tol::RANK),
        calibration: vec![(b, 2, target)],
        assertions: vec![
            assess("projected span lacks j=2", "B", &projected, &map, target, false)?,
            assess("unprojected control has j=2", "B", &control, &map, target, true)?,
        ],
    })
}

/// Tripartite probe at degree 2 on `C^a ⊗ C^c ⊗ C^e`.
///
/// Presence: `Q_{(2),(1,1),(1,1)} [M_2^a ⋆ u_CE] Q ≅ M_2^a` carries the A-side
/// `j = 2` value. Absence: `Q_{(1,1),(2),(1,1)} [u_A ⋆ (M_2^c ⋆ u_E)] Q` lacks
/// the C-side `j = 2` value; the other bracketing is reported as well.
pub fn tripartite_probe(star: &dyn StarProduct, a: usize, c: usize, e: usize, seed: u64) -> Result<ProbeReport> {
    require_degree_two(star)?;
    let sym = Partition::new(vec![2])?;
    let alt = Partition::new(vec![1, 1])?;
    let q_mid = symgroup::q_lambda_mu_nu(&alt, &sym, &alt, a, c, e, 2)?;
    let q_first = symgroup::q_lambda_mu_nu(&sym, &alt, &alt, a, c, e, 2)?;

    let u_ce = star.star_element(&MnElement::unit(c, 2), &MnElement::unit(e, 2))?;
    let presence: Vec<CMat> = symmetric_operator_basis(a, 2)
        .iter()
        .map(|m| star.star_element(m, &u_ce).map(|x| sandwich(&q_first, &x)))
        .collect::<Result<_>>()?;

    let ua = MnElement::unit(a, 2);
    let ue = MnElement::unit(e, 2);
    let mut right_nested = Vec::new();
    let mut left_nested = Vec::new();
    for g in symmetric_operator_basis(c, 2) {
        let r = star.star_element(&ua, &star.star_element(&g, &ue)?)?;
        let l = star.star_element(&star.star_element(&ua, &g)?, &ue)?;
        right_nested.push(sandwich(&q_mid, &r));
        left_nested.push(sandwich(&q_mid, &l));
    }

    let target_a = top_value(a, seed)?;
    let target_c = top_value(c, seed)?;
    let dims = [a, c, e];
    let map_a = CasimirMap::local(&dims, 0, 2);
    let map_c = CasimirMap::local(&dims, 1, 2);
    Ok(ProbeReport {
        kind: "tripartite".into(),
        star: star.name().into(),
        dims: dims.to_vec(),
        seed,
        projector_rank: linalg::numerical_rank(q_mid.matrix(), tol::RANK),
        calibration: vec![(a, 2, target_a), (c, 2, target_c)],
        assertions: vec![
            assess("M^a side carries j=2", "A", &presence, &map_a, target_a, true)?,
            assess("u_A*(M^c*u_E) lacks j=2", "C", &right_nested, &map_c, target_c, false)?,
            assess("(u_A*M^c)*u_E lacks j=2", "C", &left_nested, &map_c, target_c, false)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_ket, rng_from_seed};
    use crate::theories::ToyStar;

    #[test]
    fn dimension_formulas() {
        assert_eq!(dim_mn(3, 2), 36);
        assert_eq!(dim_nn(3, 2), 27);
        assert_eq!(dim_nn(2, 2), 5);
        for d in 2..=5 {
            for n in 1..=4 {
                assert_eq!(dim_mn(d, n), dim_nn(d, n) + dim_mn(d, n - 1));
            }
        }
    }

    #[test]
    fn generators() {
        let p = generator_njn(0, 2, 3).unwrap();
        assert!(p.max_abs_diff(&MnElement::unit(3, 2)) < 1e-14);
        for (n, d) in [(2, 2), (2, 3), (3, 2)] {
            let top = generator_njn(n, n, d).unwrap();
            let t = tensor::partial_trace(&top.as_op(), n - 1).unwrap();
            assert!(linalg::max_abs(t.matrix()) < 1e-14);
        }
        assert!(generator_njn(3, 2, 2).is_err());
    }

    #[test]
    fn small_orbits() {
        let b = orbit_span(&MnElement::unit(2, 2), 256, 1).unwrap();
        assert_eq!(b.dim(), 1);
        let blocks = decompose_mn(2, 2, 3).unwrap();
        let dims: Vec<usize> = blocks.iter().map(IrrepBlock::dim).collect();
        assert_eq!(dims, vec![1, 3, 5]);
        for b in &blocks {
            assert!(b.gram_deviation() < 1e-10);
        }
    }

    #[test]
    fn casimir_calibration_su2() {
        let s = casimir_calibrate(2, 2, 4).unwrap();
        let vals: Vec<f64> = s.calibration.iter().map(|&(_, v)| v).collect();
        assert!(vals[0].abs() < 1e-10);
        assert!((vals[1] - 4.0).abs() < 1e-9 && (vals[2] - 12.0).abs() < 1e-9);
        assert!(s.is_injective(1e-6));
        assert!(s.block_deviation < 1e-8);
    }

    #[test]
    fn casimir_is_equivariant() {
        let mut rng = rng_from_seed(6);
        let map = CasimirMap::new(2, 2);
        let m = crate::random::random_opf(&mut rng, 2, 2);
        let u = linalg::tensor_power(&haar_unitary(&mut rng, 2), 2);
        assert!(map.equivariance_gap(&u, m.matrix()) < 1e-9);
    }

    #[test]
    fn omega_overlaps() {
        let blocks = decompose_mn(2, 2, 8).unwrap();
        let plus = Ket::from_real(&[1.0, 1.0]).unwrap();
        let o = omega_support_check(&plus, &blocks).unwrap();
        assert!(o.iter().all(|&x| x > 1e-8));
        for j in 1..=2 {
            assert!(generator_overlap(&Ket::basis(2, 0), j, 2).unwrap() < 1e-15);
            assert!(generator_overlap(&plus, j, 2).unwrap() > 1e-3);
        }
        let mut rng = rng_from_seed(2);
        let psi = haar_ket(&mut rng, 2);
        assert!(omega_support_check(&psi, &blocks).unwrap().iter().all(|&x| x > 1e-8));
    }

    #[test]
    fn kernel_rows_d2() {
        let rows = kernel_lemma(2, 2, 1).unwrap();
        assert_eq!(rows[2].image_rank, 0);
        for r in &rows[..2] {
            assert_eq!(r.image_rank, r.block_dim);
            assert!(r.outside_block < 1e-10);
        }
    }

    #[test]
    fn tripartite_toy() {
        let r = tripartite_probe(&ToyStar, 2, 2, 2, 1).unwrap();
        assert!(r.all_passed(), "{r:#?}");
    }
}
