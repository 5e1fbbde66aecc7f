//! Outcome probability functions of degree `n`.
//!
//! An OPF on `C^d` is stored as its operator `F` on the symmetric subspace of
//! `(C^d)^{⊗n}` with `0 ≤ F ≤ P₊`, and evaluates as
//! `f(ψ) = tr(F |ψ⟩⟨ψ|^{⊗n})`. Degree 1 is the Born rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE};
use crate::tensor::{self, Ket, Layout, Op};
use crate::tol;

/// Orthonormal basis of the symmetric subspace of `(C^d)^{⊗n}` as the columns
/// of a `dⁿ × binom(d+n-1, n)` isometry. Columns follow the lexicographic order
/// of occupation multisets.
pub fn symmetric_isometry(d: usize, n: usize) -> CMat {
    let total = d.pow(n as u32);
    let mut columns: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut digits = vec![0; n];
    for index in 0..total {
        let mut rest = index;
        for k in (0..n).rev() {
            digits[k] = rest % d;
            rest /= d;
        }
        let mut key = digits.clone();
        key.sort_unstable();
        columns.entry(key).or_default().push(index);
    }
    let mut v = CMat::zeros(total, columns.len());
    for (col, members) in columns.values().enumerate() {
        let amp = 1.0 / (members.len() as f64).sqrt();
        for &row in members {
            v[(row, col)] = C64::new(amp, 0.0);
        }
    }
    v
}

pub fn sym_projector_matrix(d: usize, n: usize) -> CMat {
    let v = symmetric_isometry(d, n);
    &v * v.adjoint()
}

/// Element of `M_n^d`: an operator on `(C^d)^{⊗n}` with `P₊ M P₊ = M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MnElementRepr", into = "MnElementRepr")]
pub struct MnElement {
    d: usize,
    n: usize,
    matrix: CMat,
}

#[derive(Serialize, Deserialize)]
struct MnElementRepr {
    d: usize,
    n: usize,
    #[serde(with = "crate::json::cmat")]
    matrix: CMat,
}

impl TryFrom<MnElementRepr> for MnElement {
    type Error = Error;
    fn try_from(r: MnElementRepr) -> Result<Self> {
        MnElement::new(r.d, r.n, r.matrix)
    }
}

impl From<MnElement> for MnElementRepr {
    fn from(m: MnElement) -> Self {
        MnElementRepr {
            d: m.d,
            n: m.n,
            matrix: m.matrix,
        }
    }
}

fn support_deviation(d: usize, n: usize, m: &CMat) -> f64 {
    let p = sym_projector_matrix(d, n);
    linalg::max_abs_diff(&(&p * m * &p), m)
}

impl MnElement {
    pub fn new(d: usize, n: usize, matrix: CMat) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidArgument(format!("d = {d}, n = {n}")));
        }
        let dim = d.pow(n as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let deviation = support_deviation(d, n, &matrix);
        let scale = linalg::max_abs(&matrix).max(1.0);
        if deviation > tol::SUPPORT * scale {
            return Err(Error::NotSymmetricSupported { deviation });
        }
        Ok(MnElement { d, n, matrix })
    }

    /// Caller guarantees symmetric support and matching dimensions.
    pub fn new_unchecked(d: usize, n: usize, matrix: CMat) -> Self {
        debug_assert_eq!(matrix.nrows(), d.pow(n as u32));
        MnElement { d, n, matrix }
    }

    /// `P₊ M P₊` for an arbitrary operator `M`.
    pub fn project(d: usize, n: usize, matrix: &CMat) -> Result<Self> {
        let dim = d.pow(n as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let p = sym_projector_matrix(d, n);
        Ok(MnElement {
            d,
            n,
            matrix: &p * matrix * &p,
        })
    }

    pub fn unit(d: usize, n: usize) -> Self {
        MnElement {
            d,
            n,
            matrix: sym_projector_matrix(d, n),
        }
    }

    pub fn zero(d: usize, n: usize) -> Self {
        let dim = d.pow(n as u32);
        MnElement {
            d,
            n,
            matrix: CMat::zeros(dim, dim),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn as_op(&self) -> Op {
        Op::new(Layout::single(self.d, self.n), self.matrix.clone()).expect("element dimensions match layout")
    }

    /// `tr(M |ψ⟩⟨ψ|^{⊗n})`, complex for non-Hermitian elements.
    pub fn pair_with(&self, psi: &Ket) -> Result<C64> {
        if psi.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: psi.dim(),
            });
        }
        let v = psi.tensor_power(self.n);
        Ok(v.dotc(&(&self.matrix * &v)))
    }

    /// `(U†)^{⊗n} M U^{⊗n}`.
    pub fn pullback(&self, u: &CMat) -> Result<Self> {
        let deviation = linalg::unitary_deviation(u);
        if u.nrows() != self.d || deviation > tol::UNITARY {
            if u.nrows() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: u.nrows(),
                });
            }
            return Err(Error::NotUnitary { deviation });
        }
        let un = linalg::tensor_power(u, self.n);
        Ok(MnElement {
            d: self.d,
            n: self.n,
            matrix: un.adjoint() * &self.matrix * un,
        })
    }

    fn check_same_space(&self, other: &MnElement) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DegreeMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &MnElement) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(MnElement {
            d: self.d,
            n: self.n,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        MnElement {
            d: self.d,
            n: self.n,
            matrix: &self.matrix * s,
        }
    }

    pub fn max_abs_diff(&self, other: &MnElement) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }
}

/// Valid OPF: element of `M_n^d` with `0 ≤ F ≤ P₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MnElement", into = "MnElement")]
pub struct Opf {
    element: MnElement,
}

impl TryFrom<MnElement> for Opf {
    type Error = Error;
    fn try_from(e: MnElement) -> Result<Self> {
        Opf::new(e)
    }
}

impl From<Opf> for MnElement {
    fn from(f: Opf) -> Self {
        f.element
    }
}

impl Opf {
    pub fn new(element: MnElement) -> Result<Self> {
        Self::with_tolerance(element, tol::PSD)
    }

    pub fn with_tolerance(element: MnElement, psd_tol: f64) -> Result<Self> {
        let deviation = linalg::hermitian_deviation(&element.matrix);
        if deviation > tol::HERMITIAN {
            return Err(Error::NotHermitian { deviation });
        }
        let p = sym_projector_matrix(element.d, element.n);
        let (min_eig, min_gap) = tensor::interval_margins(&element.matrix, &p);
        if min_eig < -psd_tol || min_gap < -psd_tol {
            return Err(Error::OutOfInterval { min_eig, min_gap });
        }
        Ok(Opf { element })
    }

    pub fn from_matrix(d: usize, n: usize, matrix: CMat) -> Result<Self> {
        Self::new(MnElement::new(d, n, matrix)?)
    }

    /// The unit OPF `u`, operator `P₊`.
    pub fn unit(d: usize, n: usize) -> Self {
        Opf {
            element: MnElement::unit(d, n),
        }
    }

    pub fn zero(d: usize, n: usize) -> Self {
        Opf {
            element: MnElement::zero(d, n),
        }
    }

    pub fn element(&self) -> &MnElement {
        &self.element
    }

    pub fn into_element(self) -> MnElement {
        self.element
    }

    pub fn matrix(&self) -> &CMat {
        &self.element.matrix
    }

    pub fn d(&self) -> usize {
        self.element.d
    }

    pub fn n(&self) -> usize {
        self.element.n
    }
}

/// Finite outcome list summing to the unit OPF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementRepr", into = "MeasurementRepr")]
pub struct Measurement {
    outcomes: Vec<Opf>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementRepr {
    d: usize,
    n: usize,
    outcomes: Vec<Opf>,
}

impl TryFrom<MeasurementRepr> for Measurement {
    type Error = Error;
    fn try_from(r: MeasurementRepr) -> Result<Self> {
        let m = Measurement::new(r.outcomes)?;
        if m.d() != r.d || m.n() != r.n {
            return Err(Error::ShapeMismatch(
                "measurement metadata disagrees with outcomes".into(),
            ));
        }
        Ok(m)
    }
}

impl From<Measurement> for MeasurementRepr {
    fn from(m: Measurement) -> Self {
        MeasurementRepr {
            d: m.d(),
            n: m.n(),
            outcomes: m.outcomes,
        }
    }
}

impl Measurement {
    pub fn new(outcomes: Vec<Opf>) -> Result<Self> {
        let first = outcomes
            .first()
            .ok_or_else(|| Error::InvalidArgument("measurement needs at least one outcome".into()))?;
        let (d, n) = (first.d(), first.n());
        let mut sum = CMat::zeros(first.matrix().nrows(), first.matrix().ncols());
        for f in &outcomes {
            if f.n() != n {
                return Err(Error::DegreeMismatch {
                    expected: n,
                    got: f.n(),
                });
            }
            if f.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: f.d(),
                });
            }
            sum += f.matrix();
        }
        let deviation = linalg::max_abs_diff(&sum, &sym_projector_matrix(d, n));
        if deviation > tol::MEASUREMENT {
            return Err(Error::NotNormalizedMeasurement { deviation });
        }
        Ok(Measurement { outcomes })
    }

    pub fn outcomes(&self) -> &[Opf] {
        &self.outcomes
    }

    pub fn d(&self) -> usize {
        self.outcomes[0].d()
    }

    pub fn n(&self) -> usize {
        self.outcomes[0].n()
    }

    pub fn probabilities(&self, psi: &Ket) -> Result<Vec<f64>> {
        self.outcomes.iter().map(|f| evaluate(f, psi)).collect()
    }
}

/// Probability distribution over pure states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleRepr", into = "EnsembleRepr")]
pub struct Ensemble {
    members: Vec<(Ket, f64)>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleMember {
    ket: Ket,
    probability: f64,
}

#[derive(Serialize, Deserialize)]
struct EnsembleRepr {
    members: Vec<EnsembleMember>,
}

impl TryFrom<EnsembleRepr> for Ensemble {
    type Error = Error;
    fn try_from(r: EnsembleRepr) -> Result<Self> {
        Ensemble::new(r.members.into_iter().map(|m| (m.ket, m.probability)).collect())
    }
}

impl From<Ensemble> for EnsembleRepr {
    fn from(e: Ensemble) -> Self {
        EnsembleRepr {
            members: e
                .members
                .into_iter()
                .map(|(ket, probability)| EnsembleMember { ket, probability })
                .collect(),
        }
    }
}

impl Ensemble {
    pub fn new(members: Vec<(Ket, f64)>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidDistribution("empty ensemble".into()))?;
        let dim = first.0.dim();
        let mut total = 0.0;
        for (k, p) in &members {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.dim(),
                });
            }
            if *p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > tol::EQUALITY {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Ensemble { members })
    }

    pub fn pure(ket: Ket) -> Self {
        Ensemble {
            members: vec![(ket, 1.0)],
        }
    }

    pub fn uniform(kets: Vec<Ket>) -> Result<Self> {
        let p = 1.0 / kets.len().max(1) as f64;
        Ensemble::new(kets.into_iter().map(|k| (k, p)).collect())
    }

    pub fn members(&self) -> &[(Ket, f64)] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].0.dim()
    }
}

/// `ω = Σ_r p_r (|ψ_r⟩⟨ψ_r|)^{⊗n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub d: usize,
    pub n: usize,
    #[serde(with = "crate::json::cmat")]
    pub omega: CMat,
}

/// Anything that assigns a probability to each pure state.
pub trait OutcomeFunction {
    fn dim(&self) -> usize;
    fn value(&self, psi: &Ket) -> Result<f64>;

    fn ensemble_value(&self, e: &Ensemble) -> Result<f64> {
        e.members().iter().map(|(k, p)| self.value(k).map(|v| p * v)).sum()
    }
}

impl OutcomeFunction for Opf {
    fn dim(&self) -> usize {
        self.d()
    }

    fn value(&self, psi: &Ket) -> Result<f64> {
        evaluate(self, psi)
    }

    fn ensemble_value(&self, e: &Ensemble) -> Result<f64> {
        evaluate_ensemble(self, e)
    }
}

/// Clamps float noise at reporting boundaries; values below `-CLAMP` are left
/// alone so genuine violations stay visible.
pub fn clamp_probability(x: f64) -> f64 {
    if (-tol::CLAMP..0.0).contains(&x) {
        0.0
    } else if x > 1.0 && x <= 1.0 + tol::CLAMP {
        1.0
    } else {
        x
    }
}

/// `tr(F |ψ⟩⟨ψ|^{⊗n})` (unclamped).
pub fn evaluate(f: &Opf, psi: &Ket) -> Result<f64> {
    Ok(f.element.pair_with(psi)?.re)
}

pub fn evaluate_ensemble(f: &Opf, e: &Ensemble) -> Result<f64> {
    if e.dim() != f.d() {
        return Err(Error::DimensionMismatch {
            expected: f.d(),
            got: e.dim(),
        });
    }
    let omega = moment_state(e, f.n());
    Ok(linalg::hs_inner(f.matrix(), &omega.omega).re)
}

pub fn moment_state(e: &Ensemble, n: usize) -> MomentState {
    let d = e.dim();
    let dim = d.pow(n as u32);
    let mut omega = CMat::zeros(dim, dim);
    for (k, p) in e.members() {
        let v = k.tensor_power(n);
        omega += linalg::outer(&v) * C64::new(*p, 0.0);
    }
    MomentState { d, n, omega }
}

pub fn mix(fs: &[Opf], ps: &[f64]) -> Result<Opf> {
    if fs.is_empty() || fs.len() != ps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} OPFs with {} weights",
            fs.len(),
            ps.len()
        )));
    }
    if ps.iter().any(|&p| p < 0.0 || p.is_nan()) || (ps.iter().sum::<f64>() - 1.0).abs() > tol::EQUALITY {
        return Err(Error::InvalidDistribution(format!("{ps:?}")));
    }
    let mut acc = MnElement::zero(fs[0].d(), fs[0].n());
    for (f, &p) in fs.iter().zip(ps) {
        acc = acc.add(&f.element.scale(C64::new(p, 0.0)))?;
    }
    Opf::new(acc)
}

/// `f ∘ U`, operator `(U†)^{⊗n} F U^{⊗n}`.
pub fn pullback_unitary(f: &Opf, u: &CMat) -> Result<Opf> {
    Opf::new(f.element.pullback(u)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguishabilityResult {
    /// Trace distance `½‖ω₁ − ω₂‖₁`.
    pub gap: f64,
    pub witness: Option<Opf>,
    /// Witness probabilities on the two ensembles.
    pub witness_values: Option<(f64, f64)>,
    /// Scale applied to the positive-part projector.
    pub epsilon: f64,
}

pub fn distinguishability_gap(e1: &Ensemble, e2: &Ensemble, n: usize) -> Result<DistinguishabilityResult> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch {
            expected: e1.dim(),
            got: e2.dim(),
        });
    }
    let d = e1.dim();
    let delta = moment_state(e1, n).omega - moment_state(e2, n).omega;
    let gap = 0.5 * linalg::trace_norm_hermitian(&delta);
    if gap <= 1e-9 {
        return Ok(DistinguishabilityResult {
            gap,
            witness: None,
            witness_values: None,
            epsilon: 0.0,
        });
    }
    let positive = linalg::spectral_projector(&delta, tol::PSD);
    let p = sym_projector_matrix(d, n);
    let compressed = &p * positive * &p;
    let mut epsilon = 1.0;
    let witness = loop {
        let candidate = MnElement::new_unchecked(d, n, &compressed * C64::new(epsilon, 0.0));
        match Opf::new(candidate) {
            Ok(f) => break f,
            Err(_) if epsilon > 1e-6 => epsilon *= 0.5,
            Err(e) => return Err(e),
        }
    };
    let values = (evaluate_ensemble(&witness, e1)?, evaluate_ensemble(&witness, e2)?);
    Ok(DistinguishabilityResult {
        gap,
        witness: Some(witness),
        witness_values: Some(values),
        epsilon,
    })
}

/// Local OPF `α ↦ g(α ⊗ β)` of a global OPF `g` on `C^{d·b}`.
pub fn restrict_with_ancilla(g: &Opf, beta: &Ket) -> Result<Opf> {
    restrict_element(g.element(), beta).and_then(Opf::new)
}

pub fn restrict_element(g: &MnElement, beta: &Ket) -> Result<MnElement> {
    let b = beta.dim();
    if b == 0 || !g.d().is_multiple_of(b) {
        return Err(Error::ShapeMismatch(format!(
            "global dimension {} does not factor with ancilla dimension {b}",
            g.d()
        )));
    }
    let d = g.d() / b;
    let n = g.n();
    let interleaved = Op::new(Layout::interleaved(&[d, b], n), g.matrix().clone())?;
    let grouped = tensor::factor_reorder(&interleaved, &Layout::grouped(&[d, b], n))?;
    let m = grouped.matrix();
    let beta_n = beta.tensor_power(n);
    let bn = beta_n.len();
    let dn = d.pow(n as u32);
    // f[i, j] = Σ_{k,l} conj(β_k) M[(i,k),(j,l)] β_l
    let mut contracted = CVec::zeros(bn);
    let mut f = CMat::zeros(dn, dn);
    for i in 0..dn {
        for j in 0..dn {
            for k in 0..bn {
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..bn {
                    acc += m[(i * bn + k, j * bn + l)] * beta_n[l];
                }
                contracted[k] = acc;
            }
            f[(i, j)] = beta_n.dotc(&contracted);
        }
    }
    MnElement::new(d, n, f)
}

/// Re-expresses `g` on `C^a ⊗ C^b` as an element on `C^b ⊗ C^a`.
pub fn exchange_factors(g: &MnElement, a: usize) -> Result<MnElement> {
    if a == 0 || !g.d().is_multiple_of(a) {
        return Err(Error::ShapeMismatch(format!(
            "dimension {} does not factor with first factor {a}",
            g.d()
        )));
    }
    let b = g.d() / a;
    let mut w = CMat::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..b {
            w[(j * a + i, i * b + j)] = ONE;
        }
    }
    let wn = linalg::tensor_power(&w, g.n());
    Ok(MnElement::new_unchecked(g.d(), g.n(), &wn * g.matrix() * wn.adjoint()))
}

/// Local OPF `β ↦ g(α ⊗ β)`, contracting the first factor.
pub fn restrict_with_ancilla_first(g: &Opf, alpha: &Ket) -> Result<Opf> {
    let swapped = exchange_factors(g.element(), alpha.dim())?;
    restrict_element(&swapped, alpha).and_then(Opf::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_ket, haar_unitary, random_opf, rng_from_seed};

    fn hadamard() -> CMat {
        let s = 1.0 / 2f64.sqrt();
        CMat::from_row_slice(
            2,
            2,
            &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)],
        )
    }

    #[test]
    fn isometry_is_orthonormal_with_binomial_width() {
        let v = symmetric_isometry(3, 2);
        assert_eq!(v.ncols(), 6);
        assert!(linalg::max_abs_diff(&(v.adjoint() * &v), &linalg::identity(6)) < 1e-14);
        let p = tensor::sym_projector(3, 2);
        assert!(linalg::max_abs_diff(&(&v * v.adjoint()), p.matrix()) < 1e-14);
    }

    #[test]
    fn unit_and_zero_evaluate() {
        let mut rng = rng_from_seed(1);
        for _ in 0..5 {
            let psi = haar_ket(&mut rng, 3);
            assert!((evaluate(&Opf::unit(3, 2), &psi).unwrap() - 1.0).abs() < 1e-12);
            assert!(evaluate(&Opf::zero(3, 2), &psi).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn born_rule_half() {
        let f = Opf::from_matrix(2, 1, Ket::basis(2, 0).projector()).unwrap();
        let plus = Ket::from_real(&[1.0, 1.0]).unwrap();
        assert!((evaluate(&f, &plus).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_interval_and_unsupported() {
        let p = sym_projector_matrix(2, 2);
        assert!(matches!(
            Opf::from_matrix(2, 2, &p * C64::new(2.0, 0.0)),
            Err(Error::OutOfInterval { .. })
        ));
        assert!(matches!(
            MnElement::new(2, 2, linalg::identity(4)),
            Err(Error::NotSymmetricSupported { .. })
        ));
        let f = Opf::unit(2, 1);
        assert!(evaluate(&f, &Ket::basis(3, 0)).is_err());
    }

    #[test]
    fn ensemble_values() {
        let f = Opf::from_matrix(3, 1, Ket::basis(3, 0).projector()).unwrap();
        let e = Ensemble::uniform((0..3).map(|i| Ket::basis(3, i)).collect()).unwrap();
        assert!((evaluate_ensemble(&f, &e).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let p = sym_projector_matrix(2, 2);
        let k00 = Ket::basis(4, 0).projector();
        let toy = Opf::from_matrix(2, 2, &p * k00 * &p).unwrap();
        let e2 = Ensemble::uniform(vec![Ket::basis(2, 0), Ket::basis(2, 1)]).unwrap();
        assert!((evaluate_ensemble(&toy, &e2).unwrap() - 0.5).abs() < 1e-15);

        let single = Ensemble::pure(Ket::from_real(&[0.6, 0.8]).unwrap());
        let direct = evaluate(&toy, &single.members()[0].0).unwrap();
        assert!((evaluate_ensemble(&toy, &single).unwrap() - direct).abs() < 1e-15);
        assert!(Ensemble::new(vec![(Ket::basis(2, 0), 0.7)]).is_err());
    }

    #[test]
    fn moment_state_examples() {
        let e = Ensemble::uniform(vec![Ket::basis(2, 0), Ket::basis(2, 1)]).unwrap();
        let w1 = moment_state(&e, 1);
        assert!(linalg::max_abs_diff(&w1.omega, &(linalg::identity(2) * C64::new(0.5, 0.0))) < 1e-15);
        let w2 = moment_state(&e, 2);
        let mut expect = CMat::zeros(4, 4);
        expect[(0, 0)] = C64::new(0.5, 0.0);
        expect[(3, 3)] = C64::new(0.5, 0.0);
        assert!(linalg::max_abs_diff(&w2.omega, &expect) < 1e-15);
    }

    #[test]
    fn mix_and_pullback() {
        let mut rng = rng_from_seed(4);
        let f = random_opf(&mut rng, 2, 2);
        let half = mix(&[f.clone(), Opf::zero(2, 2)], &[0.5, 0.5]).unwrap();
        let psi = haar_ket(&mut rng, 2);
        assert!((evaluate(&half, &psi).unwrap() - 0.5 * evaluate(&f, &psi).unwrap()).abs() < 1e-14);
        assert_eq!(mix(std::slice::from_ref(&f), &[1.0]).unwrap(), f);
        assert!(mix(std::slice::from_ref(&f), &[0.5]).is_err());

        let same = pullback_unitary(&f, &linalg::identity(2)).unwrap();
        assert!(same.element().max_abs_diff(f.element()) < 1e-14);
        let u = haar_unitary(&mut rng, 2);
        let fu = pullback_unitary(&f, &u).unwrap();
        let upsi = psi.apply(&u).unwrap();
        assert!((evaluate(&fu, &psi).unwrap() - evaluate(&f, &upsi).unwrap()).abs() < 1e-12);
        assert!(pullback_unitary(&f, &(linalg::identity(2) * C64::new(2.0, 0.0))).is_err());

        let born = Opf::from_matrix(2, 1, Ket::basis(2, 0).projector()).unwrap();
        let h = hadamard();
        let fh = pullback_unitary(&born, &h).unwrap();
        let expect = h[(0, 0)].norm_sqr();
        assert!((evaluate(&fh, &Ket::basis(2, 0)).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn distinguishability_examples() {
        let z = Ensemble::uniform(vec![Ket::basis(2, 0), Ket::basis(2, 1)]).unwrap();
        let x = Ensemble::uniform(vec![
            Ket::from_real(&[1.0, 1.0]).unwrap(),
            Ket::from_real(&[1.0, -1.0]).unwrap(),
        ])
        .unwrap();
        let same = distinguishability_gap(&z, &z, 2).unwrap();
        assert!(same.gap < 1e-12 && same.witness.is_none());
        let n1 = distinguishability_gap(&z, &x, 1).unwrap();
        assert!(n1.gap < 1e-12 && n1.witness.is_none());
        let n2 = distinguishability_gap(&z, &x, 2).unwrap();
        assert!((n2.gap - 0.5).abs() < 1e-12);
        let (a, b) = n2.witness_values.unwrap();
        assert!(((a - b) - n2.epsilon * n2.gap).abs() < 1e-12);
    }

    #[test]
    fn restriction_of_product() {
        let q = Ket::from_real(&[0.6, 0.8]).unwrap().projector();
        let beta = Ket::from_real(&[1.0, 2.0, 2.0]).unwrap();
        let g = Opf::from_matrix(6, 1, linalg::kron(&q, &beta.projector())).unwrap();
        let f = restrict_with_ancilla(&g, &beta).unwrap();
        assert!(linalg::max_abs_diff(f.matrix(), &q) < 1e-14);
        assert!(restrict_with_ancilla(&g, &Ket::basis(4, 0)).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let f = Opf::unit(2, 2);
        let s = serde_json::to_string(&f).unwrap();
        let back: Opf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["matrix"][0][0] = serde_json::json!([2.0, 0.0]);
        assert!(serde_json::from_value::<Opf>(v.clone()).is_err());
        v["matrix"][0][0] = serde_json::json!([1.0, 0.0]);
        assert!(serde_json::from_value::<Opf>(v).is_ok());
    }
}
