//! Post-measurement state update: CP maps in Kraus form, instruments and
//! their sequential composition.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::opf::Opf;
use crate::random::{ginibre, haar_unitary};
use crate::tensor::Ket;
use crate::tol;

/// Eigenvalue floor when extracting Kraus operators from a Choi matrix.
pub const KRAUS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    d: usize,
    #[serde(with = "crate::json::cmat")]
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        if !matrix.is_square() || d == 0 {
            return Err(Error::ShapeMismatch("density matrix must be square".into()));
        }
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > tol::HERMITIAN {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::EQUALITY || tr.im.abs() > tol::EQUALITY {
            return Err(Error::InvalidDistribution(format!("trace {tr}")));
        }
        let min_eig = linalg::min_eigenvalue(&matrix);
        if min_eig < -1e-10 {
            return Err(Error::OutOfInterval {
                min_eig,
                min_gap: f64::NAN,
            });
        }
        Ok(DensityMatrix { d, matrix })
    }

    pub fn pure(psi: &Ket) -> Self {
        DensityMatrix {
            d: psi.dim(),
            matrix: psi.projector(),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix {
            d,
            matrix: linalg::identity(d) * C64::new(1.0 / d as f64, 0.0),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// Completely positive, trace-non-increasing map `ρ ↦ Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpMap {
    d: usize,
    #[serde(with = "crate::json::cmat_list")]
    kraus: Vec<CMat>,
}

impl CpMap {
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        let d = kraus
            .first()
            .map(CMat::nrows)
            .ok_or_else(|| Error::InvalidArgument("CP map needs at least one Kraus operator".into()))?;
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: k.nrows(),
                });
            }
        }
        let map = CpMap { d, kraus };
        let excess = linalg::hermitian_eigenvalues(&map.effect())
            .last()
            .copied()
            .unwrap_or(0.0)
            - 1.0;
        if excess > tol::PSD {
            return Err(Error::NotTracePreserving { deviation: excess });
        }
        Ok(map)
    }

    pub fn identity(d: usize) -> Self {
        CpMap {
            d,
            kraus: vec![linalg::identity(d)],
        }
    }

    pub fn unitary(u: &CMat) -> Result<Self> {
        let deviation = linalg::unitary_deviation(u);
        if deviation > tol::UNITARY {
            return Err(Error::NotUnitary { deviation });
        }
        CpMap::new(vec![u.clone()])
    }

    /// Kraus form of a Choi matrix `Σ_kl Λ(E_kl) ⊗ E_kl`.
    pub fn from_choi(d: usize, choi: &CMat) -> Result<Self> {
        if choi.nrows() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: choi.nrows(),
            });
        }
        let (vals, vecs) = linalg::hermitian_eigen(choi);
        if let Some(&min_eig) = vals.first() {
            if min_eig < -tol::PSD {
                return Err(Error::NotCompletelyPositive { min_eig });
            }
        }
        let mut kraus = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            if v <= KRAUS_FLOOR {
                continue;
            }
            let s = v.sqrt();
            // Eigenvector entry (out·d + in) carries K[out, in].
            kraus.push(CMat::from_fn(d, d, |o, i| vecs[(o * d + i, k)] * s));
        }
        if kraus.is_empty() {
            kraus.push(CMat::zeros(d, d));
        }
        CpMap::new(kraus)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `Σ_k K_k† K_k`.
    pub fn effect(&self) -> CMat {
        self.kraus
            .iter()
            .fold(CMat::zeros(self.d, self.d), |acc, k| acc + k.adjoint() * k)
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &CpMap) -> Result<CpMap> {
        if self.d != first.d {
            return Err(Error::DimensionMismatch {
                expected: first.d,
                got: self.d,
            });
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|b| first.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(CpMap { d: self.d, kraus })
    }
}

fn check_dim(map: &CpMap, rho: &DensityMatrix) -> Result<()> {
    if map.d != rho.d {
        return Err(Error::DimensionMismatch {
            expected: map.d,
            got: rho.d,
        });
    }
    Ok(())
}

/// Unnormalized `Λ(ρ)`.
pub fn apply(map: &CpMap, rho: &DensityMatrix) -> Result<CMat> {
    check_dim(map, rho)?;
    Ok(apply_matrix(map, &rho.matrix))
}

/// `Λ` on an arbitrary operator (linear extension).
pub fn apply_matrix(map: &CpMap, m: &CMat) -> CMat {
    map.kraus
        .iter()
        .fold(CMat::zeros(map.d, map.d), |acc, k| acc + k * m * k.adjoint())
}

/// `tr Λ(ρ)`.
pub fn outcome_probability(map: &CpMap, rho: &DensityMatrix) -> Result<f64> {
    Ok(apply(map, rho)?.trace().re)
}

/// `Λ(ρ) / tr Λ(ρ)`; errors on outcomes of probability at most `1e-12`.
pub fn post_state(map: &CpMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = apply(map, rho)?;
    let probability = out.trace().re;
    if probability <= 1e-12 {
        return Err(Error::ZeroProbability { probability });
    }
    Ok(DensityMatrix {
        d: map.d,
        matrix: linalg::symmetrize(&out).unscale(probability),
    })
}

/// POVM element `F = Σ_k K_k† K_k` as a degree-1 OPF.
pub fn povm_of(map: &CpMap) -> Result<Opf> {
    Opf::from_matrix(map.d, 1, linalg::symmetrize(&map.effect()))
}

/// Finite family of CP maps whose sum is trace-preserving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    outcomes: Vec<CpMap>,
}

impl Instrument {
    pub fn new(outcomes: Vec<CpMap>) -> Result<Self> {
        let d = outcomes
            .first()
            .map(CpMap::d)
            .ok_or_else(|| Error::InvalidArgument("instrument needs an outcome".into()))?;
        let mut total = CMat::zeros(d, d);
        for m in &outcomes {
            if m.d != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.d });
            }
            total += m.effect();
        }
        let deviation = linalg::max_abs_diff(&total, &linalg::identity(d));
        if deviation > tol::MEASUREMENT {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(Instrument { outcomes })
    }

    /// The single-outcome identity instrument.
    pub fn trivial(d: usize) -> Self {
        Instrument {
            outcomes: vec![CpMap::identity(d)],
        }
    }

    pub fn outcomes(&self) -> &[CpMap] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn d(&self) -> usize {
        self.outcomes[0].d
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.outcomes.iter().map(|m| outcome_probability(m, rho)).collect()
    }
}

/// Lüders instrument `ρ ↦ Q_i ρ Q_i` for a complete orthogonal projector family.
pub fn luders_instrument(projectors: &[CMat]) -> Result<Instrument> {
    let d = projectors
        .first()
        .map(CMat::nrows)
        .ok_or_else(|| Error::InvalidArgument("no projectors".into()))?;
    let mut total = CMat::zeros(d, d);
    for (i, q) in projectors.iter().enumerate() {
        if q.nrows() != d || q.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.nrows(),
            });
        }
        let deviation = linalg::hermitian_deviation(q);
        if deviation > tol::HERMITIAN {
            return Err(Error::NotHermitian { deviation });
        }
        if linalg::max_abs_diff(&(q * q), q) > 1e-10 {
            return Err(Error::InvalidArgument(format!("operator {i} is not idempotent")));
        }
        for (k, p) in projectors.iter().enumerate().skip(i + 1) {
            if linalg::max_abs(&(q * p)) > 1e-10 {
                return Err(Error::InvalidArgument(format!("projectors {i} and {k} overlap")));
            }
        }
        total += q;
    }
    let deviation = linalg::max_abs_diff(&total, &linalg::identity(d));
    if deviation > 1e-10 {
        return Err(Error::NotTracePreserving { deviation });
    }
    Instrument::new(
        projectors
            .iter()
            .map(|q| CpMap {
                d,
                kraus: vec![q.clone()],
            })
            .collect(),
    )
}

pub fn computational_luders(d: usize) -> Instrument {
    let ps: Vec<CMat> = (0..d).map(|i| Ket::basis(d, i).projector()).collect();
    luders_instrument(&ps).expect("basis projectors")
}

/// Sequential instrument: outcome `(i, j)` is `then_j ∘ first_i`, stored at
/// index `i · then.len() + j`.
pub fn compose(first: &Instrument, then: &Instrument) -> Result<Instrument> {
    if first.d() != then.d() {
        return Err(Error::DimensionMismatch {
            expected: first.d(),
            got: then.d(),
        });
    }
    let mut outcomes = Vec::with_capacity(first.len() * then.len());
    for a in &first.outcomes {
        for b in &then.outcomes {
            outcomes.push(b.after(a)?);
        }
    }
    Instrument::new(outcomes)
}

/// Choi matrix `Σ_kl Λ(E_kl) ⊗ E_kl` of an arbitrary linear map on `d × d`
/// matrices.
pub fn choi_matrix<F: Fn(&CMat) -> CMat>(d: usize, map: F) -> CMat {
    let mut choi = CMat::zeros(d * d, d * d);
    for k in 0..d {
        for l in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(k, l)] = C64::new(1.0, 0.0);
            choi += linalg::kron(&map(&e), &e);
        }
    }
    choi
}

pub fn choi_of(map: &CpMap) -> CMat {
    choi_matrix(map.d, |m| apply_matrix(map, m))
}

/// `(is CP, min Choi eigenvalue)` for a Choi matrix.
pub fn cp_check_choi(choi: &CMat) -> (bool, f64) {
    let min_eig = linalg::min_eigenvalue(choi);
    (
        linalg::hermitian_deviation(choi) <= tol::HERMITIAN && min_eig >= -tol::PSD,
        min_eig,
    )
}

pub fn cp_check(map: &CpMap) -> bool {
    cp_check_choi(&choi_of(map)).0
}

/// Choi matrix of the transpose map; equals the swap operator.
pub fn transpose_choi(d: usize) -> CMat {
    choi_matrix(d, |m| m.transpose())
}

/// Instrument from a Haar isometry `C^d → C^d ⊗ C^{outcomes·kraus}`: each
/// outcome gets `kraus` consecutive `d × d` blocks as Kraus operators.
pub fn random_instrument<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize, kraus: usize) -> Instrument {
    let blocks = outcomes * kraus;
    let u = haar_unitary(rng, d * blocks);
    let maps = (0..outcomes)
        .map(|o| CpMap {
            d,
            kraus: (0..kraus)
                .map(|k| u.view(((o * kraus + k) * d, 0), (d, d)).into_owned())
                .collect(),
        })
        .collect();
    Instrument::new(maps).expect("isometry blocks sum to the identity")
}

/// Random mixed state `G G† / tr(G G†)` from a square Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let g = ginibre(rng, d, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix {
        d,
        matrix: linalg::symmetrize(&m).unscale(tr),
    }
}
