//! Affine state-estimation harness.
//!
//! A target outcome is reconstructed as `g ≈ Σ_x e_x f^x + c·u` by least
//! squares over ensemble probes; the held-out max error is the residual.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irreps::dim_mn;
use crate::linalg::{self, CMat, C64};
use crate::opf::{
    evaluate_ensemble, moment_state, sym_projector_matrix, symmetric_isometry, Ensemble, MnElement, Opf,
    OutcomeFunction,
};
use crate::random::{haar_ket, probability_vector, rng_from_seed, SeededRng};
use crate::theories::{ContextualMeasurement, ContextualOutcome};
use crate::tol;

/// Structural-failure threshold for the contextual witness.
pub const WITNESS_THRESHOLD: f64 = 1e-3;

/// Feature values on a probe set: `matrix[r][x] = f^x(probe_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDesign {
    pub probes: usize,
    pub features: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl FeatureDesign {
    pub fn new(opfs: &[Opf], probes: &[Ensemble]) -> Result<Self> {
        let matrix = probes
            .iter()
            .map(|e| {
                opfs.iter()
                    .map(|f| evaluate_ensemble(f, e))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureDesign {
            probes: probes.len(),
            features: opfs.len(),
            matrix,
        })
    }

    /// Design with a trailing column of ones for the unit OPF.
    fn augmented(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.probes, self.features + 1, |r, c| {
            if c == self.features {
                1.0
            } else {
                self.matrix[r][c]
            }
        })
    }

    pub fn augmented_rank(&self) -> usize {
        real_rank(&self.augmented(), tol::RANK)
    }
}

fn real_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub coefficients: Vec<f64>,
    pub constant: f64,
    /// Max absolute error on the held-out probes.
    pub residual: f64,
    /// Sum of squared errors on the training probes.
    pub training_rss: f64,
    pub design_rank: usize,
}

fn values(target: &dyn OutcomeFunction, probes: &[Ensemble]) -> Result<Vec<f64>> {
    probes.iter().map(|e| target.ensemble_value(e)).collect()
}

/// Least-squares affine fit of `target` on `features`; rank-deficient
/// designs are reported as errors rather than fitted.
pub fn affine_reconstruct(
    features: &[Opf],
    target: &dyn OutcomeFunction,
    probes: &[Ensemble],
    holdout: &[Ensemble],
) -> Result<Reconstruction> {
    let k = features.len();
    if probes.len() < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "{} probes for {k} features; need at least {}",
            probes.len(),
            k + 2
        )));
    }
    let design = FeatureDesign::new(features, probes)?;
    let x = design.augmented();
    let rank = real_rank(&x, tol::RANK);
    if rank < k + 1 {
        return Err(Error::RankDeficient { rank, required: k + 1 });
    }
    let y = DVector::from_vec(values(target, probes)?);
    let solution = x
        .clone()
        .svd(true, true)
        .solve(&y, 0.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let fitted = &x * &solution;
    let training_rss = (fitted - &y).norm_squared();
    let coefficients: Vec<f64> = solution.iter().take(k).copied().collect();
    let constant = solution[k];

    let held = FeatureDesign::new(features, holdout)?;
    let truth = values(target, holdout)?;
    let residual = held
        .matrix
        .iter()
        .zip(&truth)
        .map(|(row, &t)| {
            let pred: f64 = row.iter().zip(&coefficients).map(|(v, e)| v * e).sum::<f64>() + constant;
            (pred - t).abs()
        })
        .fold(0.0, f64::max);
    Ok(Reconstruction {
        coefficients,
        constant,
        residual,
        training_rss,
        design_rank: rank,
    })
}

/// Ensembles of one to three Haar-random states with random weights.
pub fn random_probes<R: Rng + ?Sized>(rng: &mut R, d: usize, count: usize) -> Vec<Ensemble> {
    (0..count)
        .map(|_| {
            let size = rng.random_range(1..=3);
            let weights = probability_vector(rng, size);
            let members = weights.into_iter().map(|p| (haar_ket(rng, d), p)).collect();
            Ensemble::new(members).expect("simplex weights")
        })
        .collect()
}

/// `k = dim M_n^d − 1`.
pub fn estimability_dimension(n: usize, d: usize) -> u64 {
    dim_mn(d, n) - 1
}

/// Real rank of the span of moment states of `2·dim M_n^d` random probes,
/// minus one for the unit.
pub fn numerical_estimability_dimension(n: usize, d: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let count = 2 * dim_mn(d, n) as usize;
    let probes = random_probes(&mut rng, d, count);
    let dim = d.pow(n as u32);
    let mut rows = DMatrix::zeros(count, 2 * dim * dim);
    for (r, e) in probes.iter().enumerate() {
        let w = moment_state(e, n).omega;
        for (c, z) in w.iter().enumerate() {
            rows[(r, 2 * c)] = z.re;
            rows[(r, 2 * c + 1)] = z.im;
        }
    }
    real_rank(&rows, tol::RANK).saturating_sub(1)
}

/// `(P₊ + E/‖E‖_op) / 2`, an OPF carrying the direction of `E`.
fn shifted(d: usize, n: usize, e: &CMat) -> Opf {
    let norm = linalg::hermitian_eigenvalues(e)
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let p = sym_projector_matrix(d, n);
    let m = (p + e.unscale(norm)) * C64::new(0.5, 0.0);
    Opf::new(MnElement::new_unchecked(d, n, m)).expect("shifted basis element lies in [0, P+]")
}

/// `dim M_n^d − 1` OPFs which, together with the unit, span `M_n^d`.
pub fn feature_basis(d: usize, n: usize) -> Vec<Opf> {
    let v = symmetric_isometry(d, n);
    let m = v.ncols();
    let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let mut out = Vec::with_capacity(m * m - 1);
    for k in 0..m {
        for l in k..m {
            let vk = v.column(k);
            let vl = v.column(l);
            if k == l {
                if k > 0 {
                    out.push(shifted(d, n, &(vk * vk.adjoint())));
                }
                continue;
            }
            let kl = vk * vl.adjoint();
            let lk = vl * vk.adjoint();
            out.push(shifted(d, n, &((&kl + &lk) * s)));
            out.push(shifted(d, n, &((kl - lk) * (C64::i() * s))));
        }
    }
    out
}

/// Spin-"up" effect `(1 + n·σ)/2` along a unit Bloch direction.
pub fn qubit_up(direction: [f64; 3]) -> Result<Opf> {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction has norm {norm}")));
    }
    let [x, y, z] = direction;
    let m = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new((1.0 + z) / 2.0, 0.0),
            C64::new(x / 2.0, -y / 2.0),
            C64::new(x / 2.0, y / 2.0),
            C64::new((1.0 - z) / 2.0, 0.0),
        ],
    );
    Opf::from_matrix(2, 1, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub n: usize,
    pub features: usize,
    pub residual: f64,
    pub design_rank: usize,
    pub above_threshold: bool,
}

/// Probe counts for a degree-`n` fit on `C^d`.
fn probe_budget(d: usize, n: usize) -> (usize, usize) {
    let dim = dim_mn(d, n) as usize;
    (4 * dim + 8, 2 * dim + 8)
}

fn fit_rows(target: &dyn OutcomeFunction, d: usize, n_max: usize, rng: &mut SeededRng) -> Result<Vec<WitnessRow>> {
    (1..=n_max)
        .map(|n| {
            let features = feature_basis(d, n);
            let (train, held) = probe_budget(d, n);
            let probes = random_probes(rng, d, train);
            let holdout = random_probes(rng, d, held);
            let r = affine_reconstruct(&features, target, &probes, &holdout)?;
            Ok(WitnessRow {
                n,
                features: features.len(),
                residual: r.residual,
                design_rank: r.design_rank,
                above_threshold: r.residual > WITNESS_THRESHOLD,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessTable {
    pub basis: String,
    pub seed: u64,
    pub threshold: f64,
    pub contextual: Vec<WitnessRow>,
    /// Born-rule outcome of the same basis fitted at degree 1.
    pub born_control: WitnessRow,
    pub note: String,
}

impl WitnessTable {
    pub fn witness_holds(&self) -> bool {
        self.contextual.iter().all(|r| r.above_threshold)
    }

    /// Aligned text rendering.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<12} {:>3} {:>9} {:>14}\n", "rule", "n", "features", "residual");
        for r in &self.contextual {
            s += &format!(
                "{:<12} {:>3} {:>9} {:>14.6e}\n",
                "contextual", r.n, r.features, r.residual
            );
        }
        let b = &self.born_control;
        s += &format!("{:<12} {:>3} {:>9} {:>14.6e}\n", "born", b.n, b.features, b.residual);
        s
    }
}

/// Fits the contextual outcome `φ₁` of `basis` (d = basis size) against
/// complete degree-`n` feature sets for `n ≤ n_max`, with a Born-rule control.
pub fn non_polynomial_witness(basis: &ContextualMeasurement, n_max: usize, seed: u64) -> Result<WitnessTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let d = basis.dim();
    let target = ContextualOutcome {
        measurement: basis.clone(),
        index: 0,
    };
    let mut rng = rng_from_seed(seed);
    let contextual = fit_rows(&target, d, n_max, &mut rng)?;
    let born = Opf::from_matrix(d, 1, basis.basis()[0].projector())?;
    let born_control = fit_rows(&born, d, 1, &mut rng)?.remove(0);
    Ok(WitnessTable {
        basis: format!("{d}-dimensional orthonormal basis"),
        seed,
        threshold: WITNESS_THRESHOLD,
        contextual,
        born_control,
        note: format!("finite check for n <= {n_max}; failure for every n is not established by this run"),
    })
}

/// Helper for callers that want a fixed computational-basis witness.
pub fn computational_witness(d: usize, n_max: usize, seed: u64) -> Result<WitnessTable> {
    non_polynomial_witness(&ContextualMeasurement::computational(d), n_max, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_measurement, random_opf};

    fn split(seed: u64, d: usize, train: usize, held: usize) -> (Vec<Ensemble>, Vec<Ensemble>) {
        let mut rng = rng_from_seed(seed);
        (random_probes(&mut rng, d, train), random_probes(&mut rng, d, held))
    }

    #[test]
    fn target_in_features() {
        let mut rng = rng_from_seed(1);
        let fs: Vec<Opf> = (0..3).map(|_| random_opf(&mut rng, 2, 1)).collect();
        let (p, h) = split(2, 2, 12, 10);
        let r = affine_reconstruct(&fs, &fs[1], &p, &h).unwrap();
        assert!(r.residual < 1e-12);
        assert!((r.coefficients[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qubit_three_directions() {
        let fs = vec![
            qubit_up([1.0, 0.0, 0.0]).unwrap(),
            qubit_up([0.0, 1.0, 0.0]).unwrap(),
            qubit_up([0.0, 0.0, 1.0]).unwrap(),
        ];
        let mut rng = rng_from_seed(5);
        let target = random_measurement(&mut rng, 2, 1, 3).outcomes()[0].clone();
        let (p, h) = split(6, 2, 20, 20);
        assert!(affine_reconstruct(&fs, &target, &p, &h).unwrap().residual < 1e-8);
        let two = affine_reconstruct(&fs[..2], &target, &p, &h).unwrap();
        assert!(two.residual > 1e-3);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let f = qubit_up([0.0, 0.0, 1.0]).unwrap();
        let (p, h) = split(1, 2, 10, 5);
        let err = affine_reconstruct(&[f.clone(), f.clone()], &f, &p, &h).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 2, required: 3 }));
    }

    #[test]
    fn estimability_values() {
        assert_eq!(estimability_dimension(1, 2), 3);
        assert_eq!(estimability_dimension(1, 3), 8);
        assert_eq!(estimability_dimension(2, 2), 8);
        assert_eq!(numerical_estimability_dimension(2, 2, 3), 8);
        assert_eq!(numerical_estimability_dimension(1, 3, 3), 8);
    }

    #[test]
    fn feature_basis_sizes() {
        for (d, n) in [(2, 1), (2, 2), (3, 1), (2, 3)] {
            assert_eq!(feature_basis(d, n).len() as u64, dim_mn(d, n) - 1);
        }
    }

    #[test]
    fn witness_small() {
        let t = computational_witness(2, 2, 7).unwrap();
        assert!(t.witness_holds(), "{t:?}");
        assert!(t.born_control.residual < 1e-10);
        assert!(t.to_table().contains("contextual"));
    }
}
