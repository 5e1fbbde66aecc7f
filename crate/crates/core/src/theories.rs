//! Concrete measurement postulates and their star products.
//!
//! A star product embeds a pair of local OPFs `f` on `C^a` and `g` on `C^b`
//! as a joint OPF on `C^a ⊗ C^b`. Outputs use the interleaved storage
//! `(C^a ⊗ C^b)^{⊗n}`, which coincides with the single-factor storage of
//! `(C^{ab})^{⊗n}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::opf::{self, evaluate, Measurement, MnElement, Opf};
use crate::random::{haar_ket, haar_unitary, random_measurement, random_opf, rng_from_seed, trial_rng, unit_interval};
use crate::tensor::{self, Ket, Layout, Op};
use crate::tol;

/// A bilinear rule `(M_n^a, M_n^b) → M_n^{ab}`.
pub trait StarProduct: Send + Sync {
    fn name(&self) -> &'static str;
    fn degree(&self) -> usize;

    /// The bilinear map on arbitrary elements (not only valid OPFs).
    fn star_element(&self, f: &MnElement, g: &MnElement) -> Result<MnElement>;

    /// Star of two OPFs; the result is re-validated as an OPF.
    fn star(&self, f: &Opf, g: &Opf) -> Result<Opf> {
        Opf::new(self.star_element(f.element(), g.element())?)
    }
}

fn check_degree(expected: usize, f: &MnElement, g: &MnElement) -> Result<()> {
    for x in [f, g] {
        if x.n() != expected {
            return Err(Error::DegreeMismatch { expected, got: x.n() });
        }
    }
    Ok(())
}

/// The quantum rule: `F ⋆ G = F ⊗ G` at degree 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantumStar;

impl StarProduct for QuantumStar {
    fn name(&self) -> &'static str {
        "quantum"
    }

    fn degree(&self) -> usize {
        1
    }

    fn star_element(&self, f: &MnElement, g: &MnElement) -> Result<MnElement> {
        check_degree(1, f, g)?;
        Ok(MnElement::new_unchecked(
            f.d() * g.d(),
            1,
            linalg::kron(f.matrix(), g.matrix()),
        ))
    }
}

/// The degree-2 toy rule
/// `F ⋆ G = F ⊗ G + (tr F / tr P₊^a)(tr G / tr P₊^b) P₋^a ⊗ P₋^b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyStar;

impl StarProduct for ToyStar {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn degree(&self) -> usize {
        2
    }

    fn star_element(&self, f: &MnElement, g: &MnElement) -> Result<MnElement> {
        check_degree(2, f, g)?;
        let (a, b) = (f.d(), g.d());
        let tr_pa = (a * (a + 1) / 2) as f64;
        let tr_pb = (b * (b + 1) / 2) as f64;
        let coeff = f.matrix().trace() / tr_pa * (g.matrix().trace() / tr_pb);
        let pm_a = tensor::antisym_projector(a, 2)?;
        let pm_b = tensor::antisym_projector(b, 2)?;
        let grouped = linalg::kron(f.matrix(), g.matrix()) + linalg::kron(pm_a.matrix(), pm_b.matrix()) * coeff;
        let grouped = Op::new(Layout::grouped(&[a, b], 2), grouped)?;
        let joint = tensor::factor_reorder(&grouped, &Layout::interleaved(&[a, b], 2))?;
        Ok(MnElement::new_unchecked(a * b, 2, joint.into_matrix()))
    }
}

pub fn star_by_name(name: &str) -> Result<Box<dyn StarProduct>> {
    match name {
        "quantum" => Ok(Box::new(QuantumStar)),
        "toy" => Ok(Box::new(ToyStar)),
        other => Err(Error::UnknownName(format!(
            "star product '{other}' (expected quantum or toy)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub name: String,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub star: String,
    pub dims: (usize, usize),
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const AXIOM_LOCAL_STRUCTURE: &str = "local-structure";
pub const AXIOM_PROBABILITY: &str = "probability";
pub const AXIOM_PRODUCT_STATES: &str = "product-states";
pub const AXIOM_MIXING: &str = "mixing";
pub const AXIOM_GROUP_ACTION: &str = "group-action";
pub const AXIOM_VALIDITY: &str = "valid-output";

#[derive(Default)]
struct Tracker(Vec<(&'static str, f64)>);

impl Tracker {
    fn record(&mut self, name: &'static str, dev: f64) {
        match self.0.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = slot.1.max(dev),
            None => self.0.push((name, dev)),
        }
    }
}

fn interval_violation(m: &MnElement) -> f64 {
    if linalg::hermitian_deviation(m.matrix()) > tol::HERMITIAN {
        return f64::INFINITY;
    }
    let p = opf::sym_projector_matrix(m.d(), m.n());
    let (low, high) = tensor::interval_margins(m.matrix(), &p);
    (-low).max(-high).max(0.0)
}

fn one_axiom_trial<R: Rng + ?Sized>(
    star: &dyn StarProduct,
    a: usize,
    b: usize,
    rng: &mut R,
    t: &mut Tracker,
) -> Result<()> {
    let n = star.degree();
    let (f, f2) = (random_opf(rng, a, n), random_opf(rng, a, n));
    let (g, g2) = (random_opf(rng, b, n), random_opf(rng, b, n));
    let (ua, ub) = (Opf::unit(a, n), Opf::unit(b, n));
    let fg = star.star_element(f.element(), g.element())?;
    t.record(AXIOM_VALIDITY, interval_violation(&fg));

    // Local structure, both factor orders, with a random ancilla state.
    let beta = haar_ket(rng, b);
    let alpha = haar_ket(rng, a);
    let fu = Opf::new(star.star_element(f.element(), ub.element())?)?;
    let ug = Opf::new(star.star_element(ua.element(), g.element())?)?;
    let left = opf::restrict_with_ancilla(&fu, &beta)?;
    let right = opf::restrict_with_ancilla_first(&ug, &alpha)?;
    t.record(
        AXIOM_LOCAL_STRUCTURE,
        left.element()
            .max_abs_diff(f.element())
            .max(right.element().max_abs_diff(g.element())),
    );

    // Probability: units, zeros and full measurements compose to the unit.
    let uu = star.star_element(ua.element(), ub.element())?;
    let f0 = star.star_element(f.element(), &MnElement::zero(b, n))?;
    let g0 = star.star_element(&MnElement::zero(a, n), g.element())?;
    let ma = random_measurement(rng, a, n, 2);
    let mb = random_measurement(rng, b, n, 3);
    let mut total = MnElement::zero(a * b, n);
    for x in ma.outcomes() {
        for y in mb.outcomes() {
            total = total.add(&star.star_element(x.element(), y.element())?)?;
        }
    }
    let unit_ab = MnElement::unit(a * b, n);
    let dev = uu
        .max_abs_diff(&unit_ab)
        .max(linalg::max_abs(f0.matrix()))
        .max(linalg::max_abs(g0.matrix()))
        .max(total.max_abs_diff(&unit_ab));
    t.record(AXIOM_PROBABILITY, dev);

    // Factorization on product states.
    let fg_opf = Opf::new(fg.clone())?;
    let joint = evaluate(&fg_opf, &alpha.kron(&beta))?;
    let split = evaluate(&f, &alpha)? * evaluate(&g, &beta)?;
    t.record(AXIOM_PRODUCT_STATES, (joint - split).abs());

    // Mixing in either slot.
    let p = unit_interval(rng);
    let mixed_f = opf::mix(&[f.clone(), f2.clone()], &[p, 1.0 - p])?;
    let mixed_g = opf::mix(&[g.clone(), g2.clone()], &[p, 1.0 - p])?;
    let w = |x: f64| C64::new(x, 0.0);
    let lhs_a = star.star_element(mixed_f.element(), g.element())?;
    let rhs_a = fg
        .scale(w(p))
        .add(&star.star_element(f2.element(), g.element())?.scale(w(1.0 - p)))?;
    let lhs_b = star.star_element(f.element(), mixed_g.element())?;
    let rhs_b = fg
        .scale(w(p))
        .add(&star.star_element(f.element(), g2.element())?.scale(w(1.0 - p)))?;
    t.record(AXIOM_MIXING, lhs_a.max_abs_diff(&rhs_a).max(lhs_b.max_abs_diff(&rhs_b)));

    // Local unitaries: (f∘U) ⋆ (g∘V) = (f ⋆ g)∘(U ⊗ V).
    let u = haar_unitary(rng, a);
    let v = haar_unitary(rng, b);
    let lhs = star.star_element(&f.element().pullback(&u)?, &g.element().pullback(&v)?)?;
    let rhs = fg.pullback(&linalg::kron(&u, &v))?;
    t.record(AXIOM_GROUP_ACTION, lhs.max_abs_diff(&rhs));
    Ok(())
}

/// Samples `trials` random configurations and records, per axiom, the largest
/// deviation observed.
pub fn verify_star_axioms(
    star: &dyn StarProduct,
    a: usize,
    b: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut tracker = Tracker::default();
    for i in 0..trials {
        let mut rng = trial_rng(seed, i as u64);
        one_axiom_trial(star, a, b, &mut rng, &mut tracker)?;
    }
    Ok(AxiomReport {
        star: star.name().to_string(),
        dims: (a, b),
        trials,
        seed,
        tolerance,
        checks: tracker
            .0
            .into_iter()
            .map(|(name, dev)| AxiomCheck {
                name: name.to_string(),
                max_deviation: dev,
                passed: dev < tolerance,
            })
            .collect(),
    })
}

/// Replayable witness of an associativity violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub star: String,
    pub dims: [usize; 3],
    pub seed: u64,
    pub trial_index: u64,
    pub f: MnElement,
    pub g: MnElement,
    pub h: MnElement,
    pub state: Ket,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociativityResult {
    pub gap: f64,
    pub trials: usize,
    pub certificate: Certificate,
}

fn associativity_values(
    star: &dyn StarProduct,
    f: &MnElement,
    g: &MnElement,
    h: &MnElement,
    psi: &Ket,
) -> Result<(f64, f64)> {
    let left = star.star_element(&star.star_element(f, g)?, h)?;
    let right = star.star_element(f, &star.star_element(g, h)?)?;
    Ok((left.pair_with(psi)?.re, right.pair_with(psi)?.re))
}

fn associativity_trial(star: &dyn StarProduct, dims: [usize; 3], seed: u64, index: u64) -> Result<Certificate> {
    let n = star.degree();
    let mut rng = trial_rng(seed, index);
    let f = random_opf(&mut rng, dims[0], n).into_element();
    let g = random_opf(&mut rng, dims[1], n).into_element();
    let h = random_opf(&mut rng, dims[2], n).into_element();
    let state = haar_ket(&mut rng, dims.iter().product());
    let (lhs, rhs) = associativity_values(star, &f, &g, &h, &state)?;
    Ok(Certificate {
        star: star.name().to_string(),
        dims,
        seed,
        trial_index: index,
        f,
        g,
        h,
        state,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Largest `|((f⋆g)⋆h)(ψ) − (f⋆(g⋆h))(ψ)|` over seeded random trials.
pub fn associativity_gap(
    star: &dyn StarProduct,
    a: usize,
    b: usize,
    c: usize,
    trials: usize,
    seed: u64,
) -> Result<AssociativityResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut best: Option<Certificate> = None;
    for i in 0..trials as u64 {
        let cert = associativity_trial(star, [a, b, c], seed, i)?;
        if best.as_ref().is_none_or(|b| cert.gap > b.gap) {
            best = Some(cert);
        }
    }
    let certificate = best.expect("at least one trial");
    Ok(AssociativityResult {
        gap: certificate.gap,
        trials,
        certificate,
    })
}

impl Certificate {
    /// Regenerates the trial from its seed and index.
    pub fn replay(&self) -> Result<Certificate> {
        let star = star_by_name(&self.star)?;
        associativity_trial(star.as_ref(), self.dims, self.seed, self.trial_index)
    }

    /// Recomputes the gap from the stored operators and state.
    pub fn recompute_gap(&self) -> Result<f64> {
        let star = star_by_name(&self.star)?;
        let (lhs, rhs) = associativity_values(star.as_ref(), &self.f, &self.g, &self.h, &self.state)?;
        Ok((lhs - rhs).abs())
    }
}

/// Orthonormal basis used by the contextual rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualMeasurement {
    basis: Vec<Ket>,
}

impl ContextualMeasurement {
    pub fn new(basis: Vec<Ket>) -> Result<Self> {
        let d = basis.first().map_or(0, Ket::dim);
        if d == 0 || basis.len() != d {
            return Err(Error::InvalidArgument(format!(
                "need {d} basis vectors, got {}",
                basis.len()
            )));
        }
        for (i, x) in basis.iter().enumerate() {
            if x.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.dim(),
                });
            }
            for (j, y) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let dev = (x.inner(y) - C64::new(target, 0.0)).norm();
                if dev > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "basis vectors {i}, {j} not orthonormal (deviation {dev:.3e})"
                    )));
                }
            }
        }
        Ok(ContextualMeasurement { basis })
    }

    pub fn computational(d: usize) -> Self {
        ContextualMeasurement {
            basis: (0..d).map(|i| Ket::basis(d, i)).collect(),
        }
    }

    pub fn basis(&self) -> &[Ket] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// `P(φ_i|ψ) = |⟨φ_i|ψ⟩|⁴ / Σ_j |⟨φ_j|ψ⟩|⁴`.
pub fn contextual_probabilities(m: &ContextualMeasurement, psi: &Ket) -> Result<Vec<f64>> {
    if psi.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: psi.dim(),
        });
    }
    let fourth: Vec<f64> = m.basis.iter().map(|phi| phi.inner(psi).norm_sqr().powi(2)).collect();
    let total: f64 = fourth.iter().sum();
    Ok(fourth.into_iter().map(|x| x / total).collect())
}

/// One outcome of the contextual rule as a black-box evaluator.
#[derive(Debug, Clone)]
pub struct ContextualOutcome {
    pub measurement: ContextualMeasurement,
    pub index: usize,
}

impl opf::OutcomeFunction for ContextualOutcome {
    fn dim(&self) -> usize {
        self.measurement.dim()
    }

    fn value(&self, psi: &Ket) -> Result<f64> {
        Ok(contextual_probabilities(&self.measurement, psi)?[self.index])
    }
}

/// Index drawn from `probs` with one uniform variate.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let x = unit_interval(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len().saturating_sub(1)
}

/// Born probabilities of a degree-1 measurement and a seeded sample.
pub fn born_measure(povm: &Measurement, psi: &Ket, seed: u64) -> Result<(Vec<f64>, usize)> {
    if povm.n() != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            got: povm.n(),
        });
    }
    let probs: Vec<f64> = povm
        .probabilities(psi)?
        .into_iter()
        .map(opf::clamp_probability)
        .collect();
    let mut rng = rng_from_seed(seed);
    let index = sample_index(&probs, &mut rng);
    Ok((probs, index))
}

/// Projective measurement in the computational basis.
pub fn computational_povm(d: usize) -> Measurement {
    let outcomes = (0..d)
        .map(|i| Opf::from_matrix(d, 1, Ket::basis(d, i).projector()).expect("basis projector"))
        .collect();
    Measurement::new(outcomes).expect("basis projectors sum to identity")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_compose_to_unit() {
        for (star, n) in [(&QuantumStar as &dyn StarProduct, 1), (&ToyStar, 2)] {
            for (a, b) in [(2, 2), (2, 3), (3, 2)] {
                let uu = star.star(&Opf::unit(a, n), &Opf::unit(b, n)).unwrap();
                assert!(uu.element().max_abs_diff(&MnElement::unit(a * b, n)) < 1e-12);
            }
        }
    }

    #[test]
    fn toy_star_zero_and_degree() {
        let mut rng = rng_from_seed(2);
        let f = random_opf(&mut rng, 2, 2);
        let z = ToyStar.star(&f, &Opf::zero(3, 2)).unwrap();
        assert!(linalg::max_abs(z.matrix()) < 1e-15);
        assert!(matches!(
            ToyStar.star(&Opf::unit(2, 1), &Opf::unit(2, 1)),
            Err(Error::DegreeMismatch { .. })
        ));
        assert!(QuantumStar.star(&f, &f).is_err());
    }

    #[test]
    fn axioms_hold_for_both_stars() {
        for star in [&QuantumStar as &dyn StarProduct, &ToyStar] {
            let r = verify_star_axioms(star, 2, 2, 10, 1e-10, 5).unwrap();
            assert!(r.all_passed(), "{r:?}");
            assert_eq!(r.checks.len(), 6);
        }
    }

    #[test]
    fn associativity_quantum_vs_toy() {
        let q = associativity_gap(&QuantumStar, 2, 2, 2, 20, 1).unwrap();
        assert!(q.gap < 1e-12);
        let t = associativity_gap(&ToyStar, 2, 2, 2, 20, 1).unwrap();
        assert!(t.gap > 1e-3);
        let again = t.certificate.replay().unwrap();
        assert_eq!(again, t.certificate);
        assert_eq!(t.certificate.recompute_gap().unwrap(), t.gap);
    }

    #[test]
    fn contextual_examples() {
        let m = ContextualMeasurement::computational(2);
        assert_eq!(contextual_probabilities(&m, &Ket::basis(2, 1)).unwrap(), vec![0.0, 1.0]);
        let plus = Ket::from_real(&[1.0, 1.0]).unwrap();
        let p = contextual_probabilities(&m, &plus).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        let psi = Ket::from_real(&[(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt()]).unwrap();
        let p = contextual_probabilities(&m, &psi).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
        assert!(ContextualMeasurement::new(vec![Ket::basis(2, 0), plus]).is_err());
    }

    #[test]
    fn born_examples() {
        let z = computational_povm(2);
        let (p, k) = born_measure(&z, &Ket::basis(2, 0), 9).unwrap();
        assert_eq!((p, k), (vec![1.0, 0.0], 0));
        let plus = Ket::from_real(&[1.0, 1.0]).unwrap();
        let (p, _) = born_measure(&z, &plus, 9).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }
}
