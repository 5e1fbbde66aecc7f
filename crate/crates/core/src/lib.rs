//! Outcome-probability-function (OPF) toolkit.
//!
//! Degree-`n` measurement postulates are represented by operators `F` on the
//! symmetric subspace of `(C^d)^{⊗n}`, evaluated as `f(ψ) = tr(F |ψ⟩⟨ψ|^{⊗n})`.
//! The crate provides the dense tensor kernels, symmetric-group and SU(d)
//! combinatorics, the OPF calculus, concrete star products, the irrep
//! decomposition of the symmetric operator spaces, the quantum-instrument
//! calculus, and the state-estimation harness, all at desk scale (total
//! dimension ≤ 512).

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod irreps;
pub mod json;
pub mod linalg;
pub mod opf;
pub mod random;
pub mod symgroup;
pub mod tensor;
pub mod theories;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use opf::{Ensemble, Measurement, MnElement, MomentState, Opf};
pub use symgroup::Partition;
pub use tensor::{FactorShape, Ket, Layout, Op, Permutation};
pub use theories::{QuantumStar, StarProduct, ToyStar};
