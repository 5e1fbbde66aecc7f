//! Numerical tolerances shared across the crate.

use serde::{Deserialize, Serialize};

pub const HERMITIAN: f64 = 1e-10;
pub const PSD: f64 = 1e-9;
pub const EQUALITY: f64 = 1e-12;
pub const RANK: f64 = 1e-9;
pub const SUPPORT: f64 = 1e-10;
pub const UNITARY: f64 = 1e-10;
pub const NORM: f64 = 1e-12;
pub const MEASUREMENT: f64 = 1e-10;
/// Tiny negative probabilities at least this large are clamped to zero when reported.
pub const CLAMP: f64 = 1e-10;

/// Run-level tolerance set; the CLI config may override any entry.
///
/// The last five entries are the pass thresholds of CLI checks: `axiom` for
/// identities that hold exactly in exact arithmetic, `residual` for held-out
/// reconstruction error, `control` for the Born-rule control fit, `witness`
/// for the lower bound a failing fit must exceed, `casimir` for relative
/// eigenvalue matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub psd: f64,
    pub equality: f64,
    pub rank: f64,
    pub support: f64,
    pub axiom: f64,
    pub residual: f64,
    pub control: f64,
    pub witness: f64,
    pub casimir: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: HERMITIAN,
            psd: PSD,
            equality: EQUALITY,
            rank: RANK,
            support: SUPPORT,
            axiom: 1e-10,
            residual: 1e-8,
            control: 1e-10,
            witness: 1e-3,
            casimir: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "hermitian" => &mut self.hermitian,
            "psd" => &mut self.psd,
            "equality" => &mut self.equality,
            "rank" => &mut self.rank,
            "support" => &mut self.support,
            "axiom" => &mut self.axiom,
            "residual" => &mut self.residual,
            "control" => &mut self.control,
            "witness" => &mut self.witness,
            "casimir" => &mut self.casimir,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn all_positive(&self) -> bool {
        [
            self.hermitian,
            self.psd,
            self.equality,
            self.rank,
            self.support,
            self.axiom,
            self.residual,
            self.control,
            self.witness,
            self.casimir,
        ]
        .iter()
        .all(|&t| t > 0.0 && t.is_finite())
    }
}
