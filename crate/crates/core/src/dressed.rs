//! Dressed-state limits of the driven two-atom system and the peak positions
//! they predict.
//!
//! Levels are expressed in the two-level subspace spanned by
//! `{|ee⟩, |eg⟩, |ge⟩, |gg⟩}` with `e = |2⟩`, `g = |4⟩` and the first label
//! for atom 1. Energies are eigenvalues of `−H` restricted to that block;
//! only differences enter the spectrum.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{omega11_axial, omega22_axial, CouplingSet};

/// Drive must exceed the coupling (or vice versa) by this factor.
pub const DOMINANCE: f64 = 5.0;
/// `|Ω_22|` below this (in γ) counts as non-interacting.
pub const NEGLIGIBLE_DDI: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    IndependentAtoms,
    StrongDriveWeakDdi,
    StrongDdiWeakDrive,
    Comparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub rabi1: f64,
    pub rabi2: f64,
    pub omega22: f64,
}

impl Regime {
    pub fn classify(c: &CouplingSet) -> Self {
        let (a1, a2) = (c.rabi1.abs(), c.rabi2.abs());
        let w = c.omega22().abs();
        let kind = if w < NEGLIGIBLE_DDI {
            RegimeKind::IndependentAtoms
        } else if a1.min(a2) > DOMINANCE * w {
            RegimeKind::StrongDriveWeakDdi
        } else if w > DOMINANCE * a1.max(a2) {
            RegimeKind::StrongDdiWeakDrive
        } else {
            RegimeKind::Comparable
        };
        Regime {
            kind,
            rabi1: c.rabi1,
            rabi2: c.rabi2,
            omega22: c.omega22(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressedLevel {
    pub label: String,
    /// Over `{|ee⟩, |eg⟩, |ge⟩, |gg⟩}`.
    pub amplitude: [f64; 4],
    pub energy: f64,
}

fn level(label: &str, amplitude: [f64; 4], norm: f64, energy: f64) -> DressedLevel {
    DressedLevel {
        label: label.to_owned(),
        amplitude: amplitude.map(|a| a / norm),
        energy,
    }
}

/// Dressed states for `Ω(r_μ) ≫ Ω_22`.
pub fn strong_drive_levels(rabi1: f64, rabi2: f64, omega22: f64) -> [DressedLevel; 4] {
    let (o1, o2, w) = (rabi1, rabi2, omega22);
    [
        level("p", [1.0, 1.0, 1.0, 1.0], 2.0, (o1 + o2 + w) / 2.0),
        level("m", [1.0, -1.0, -1.0, 1.0], 2.0, -(o1 + o2 - w) / 2.0),
        level("q", [-1.0, 1.0, -1.0, 1.0], 2.0, (o1 - o2 - w) / 2.0),
        level("l", [-1.0, -1.0, 1.0, 1.0], 2.0, -(o1 - o2 + w) / 2.0),
    ]
}

/// Dressed states for `Ω(r_μ) ≪ Ω_22`.
pub fn strong_ddi_levels(rabi1: f64, rabi2: f64, omega22: f64) -> Result<[DressedLevel; 4]> {
    if omega22 == 0.0 || !omega22.is_finite() {
        return Err(Error::invalid("omega22", "perturbative levels need a nonzero coupling"));
    }
    let (o1, o2, w) = (rabi1, rabi2, omega22);
    let s = std::f64::consts::SQRT_2;
    let minus2 = (o1 - o2).powi(2) / (4.0 * w);
    let plus2 = (o1 + o2).powi(2) / (4.0 * w);
    Ok([
        level("a", [0.0, -1.0, 1.0, 0.0], s, -(w + minus2)),
        level("+", [-1.0, 0.0, 0.0, 1.0], s, minus2),
        level("-", [1.0, 0.0, 0.0, 1.0], s, -plus2),
        level("0", [0.0, 1.0, 1.0, 0.0], s, w + plus2),
    ])
}

/// `H` restricted to `{|ee⟩, |eg⟩, |ge⟩, |gg⟩}` on resonance.
pub fn block_hamiltonian(rabi1: f64, rabi2: f64, omega22: f64) -> Matrix4<f64> {
    let (h1, h2) = (-0.5 * rabi1, -0.5 * rabi2);
    Matrix4::new(
        0.0, h2, h1, 0.0, //
        h2, 0.0, -omega22, h1, //
        h1, -omega22, 0.0, h2, //
        0.0, h1, h2, 0.0,
    )
}

/// Exact eigenvalues of `−H_block`, ascending; directly comparable with the
/// perturbative level energies.
pub fn exact_block_energies(rabi1: f64, rabi2: f64, omega22: f64) -> [f64; 4] {
    let eig = SymmetricEigen::new(-block_hamiltonian(rabi1, rabi2, omega22));
    let mut e = [0.0; 4];
    e.copy_from_slice(eig.eigenvalues.as_slice());
    e.sort_by(f64::total_cmp);
    e
}

fn symmetric(sidebands: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    for s in sidebands {
        let s = s.abs();
        out.push(s);
        out.push(-s);
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out
}

/// Sorted predicted peak detunings (units of γ) for the given regime.
pub fn predict_peaks(regime: &Regime, c: &CouplingSet) -> Result<Vec<f64>> {
    let (o1, o2) = (regime.rabi1.abs(), regime.rabi2.abs());
    let w = regime.omega22.abs();
    match regime.kind {
        RegimeKind::IndependentAtoms => Ok(symmetric([o1, o2])),
        RegimeKind::StrongDriveWeakDdi => Ok(symmetric([o1 + w, o1 - w, o2 + w, o2 - w])),
        RegimeKind::StrongDdiWeakDrive if c.is_two_level() => Ok(symmetric([
            w + o1 * o2 / w,
            w + (o1 + o2).powi(2) / (2.0 * w),
            2.0 * w + (o1 * o1 + o2 * o2) / (2.0 * w),
            (o1 * o1 + o2 * o2) / (2.0 * w),
        ])),
        RegimeKind::StrongDdiWeakDrive => Ok(symmetric([omega11_axial(c.eta), omega22_axial(c.eta)])),
        RegimeKind::Comparable => Err(Error::NoClosedForm),
    }
}

/// Largest detuning with spectral weight, used to size default grids. Falls
/// back to drive plus twice the strongest coupling when no closed form exists.
pub fn spectral_extent(c: &CouplingSet) -> f64 {
    let regime = Regime::classify(c);
    let extent = match predict_peaks(&regime, c) {
        Ok(p) => p.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        Err(_) => {
            let strongest = c.omega.iter().map(|z| z.norm()).fold(0.0, f64::max);
            c.rabi1.abs().max(c.rabi2.abs()) + 2.0 * strongest
        }
    };
    extent.max(10.0)
}
