//! Seeded sampling: Haar unitaries and states, random OPFs and measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec, C64};
use crate::opf::{symmetric_isometry, Measurement, MnElement, Opf};
use crate::tensor::Ket;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for trial `index` of a run seeded with `seed`; the
/// stream does not depend on how many trials ran before it.
pub fn trial_rng(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let qr = ginibre(rng, dim, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    let v = CVec::from_fn(dim, |_, _| gaussian_c64(rng));
    Ket::normalized(v).expect("gaussian vector is nonzero almost surely")
}

pub fn unit_interval<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

pub fn probability_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    // Exponential spacings give a uniform point on the simplex.
    let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `V U diag(w) U† V†` with `V` an isometry onto the symmetric subspace, `U`
/// Haar on that subspace and `w ∈ [0,1]`; lies in `[0, P₊]` by construction.
pub fn random_opf<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Opf {
    let v = symmetric_isometry(d, n);
    let m = v.ncols();
    let u = haar_unitary(rng, m);
    let w = CMat::from_diagonal(&CVec::from_fn(m, |_, _| C64::new(unit_interval(rng), 0.0)));
    let inner = &u * w * u.adjoint();
    let f = &v * inner * v.adjoint();
    Opf::new(MnElement::new_unchecked(d, n, f)).expect("sampled operator lies in [0, P+]")
}

/// `outcomes`-outcome measurement: a shared Haar eigenbasis on the symmetric
/// subspace with a random stochastic split of every eigenvalue 1.
pub fn random_measurement<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize, outcomes: usize) -> Measurement {
    assert!(outcomes >= 1);
    let v = symmetric_isometry(d, n);
    let m = v.ncols();
    let u = haar_unitary(rng, m);
    let vu = &v * &u;
    let weights: Vec<Vec<f64>> = (0..m).map(|_| probability_vector(rng, outcomes)).collect();
    let opfs = (0..outcomes)
        .map(|i| {
            let w = CMat::from_diagonal(&CVec::from_fn(m, |k, _| C64::new(weights[k][i], 0.0)));
            let f = &vu * w * vu.adjoint();
            Opf::new(MnElement::new_unchecked(d, n, f)).expect("sampled outcome in [0, P+]")
        })
        .collect();
    Measurement::new(opfs).expect("weights sum to one per eigenvector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_deviation;

    #[test]
    fn haar_is_unitary_and_reproducible() {
        let mut a = rng_from_seed(7);
        let mut b = rng_from_seed(7);
        let u = haar_unitary(&mut a, 5);
        let v = haar_unitary(&mut b, 5);
        assert!(unitary_deviation(&u) < 1e-12);
        assert_eq!(u, v);
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let x: f64 = trial_rng(3, 10).random();
        let _ = trial_rng(3, 9).random::<f64>();
        let y: f64 = trial_rng(3, 10).random();
        assert_eq!(x, y);
        let z: f64 = trial_rng(3, 11).random();
        assert_ne!(x, z);
    }

    #[test]
    fn simplex_sums_to_one() {
        let mut r = rng_from_seed(1);
        let p = probability_vector(&mut r, 4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}
