//! Two-atom geometry, transition dipoles and dipole-dipole coupling constants.
//!
//! Units: frequencies in units of the single-atom rate `γ`, lengths in units of
//! the transition wavelength `λ`. With these units `k0 = k_L = 2π` and the
//! combination `k0³ |D|² / (4πε0 ħ)` equals `3γ/2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wave number of both the transition and the driving laser (λ = 1).
pub const K0: f64 = TAU;

/// `k0³ D² / (4π ε0 ħ)` in units of γ.
const TENSOR_PREFACTOR: f64 = 1.5;

/// Default position of atom 1, `(0.05λ, 0, 0)`.
pub const DEFAULT_R1: [f64; 3] = [0.05, 0.0, 0.0];

/// Relative placement of the two atoms.
///
/// `r2 = r1 + R (sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub r1: [f64; 3],
}

impl Geometry {
    /// Validates `R > 0` and `θ ∈ [0, π]`; `φ` is wrapped into `[0, 2π)`.
    pub fn new(r: f64, theta: f64, phi: f64, r1: [f64; 3]) -> Result<Self> {
        if r == 0.0 {
            return Err(Error::CoincidentAtoms);
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("R", "R must be positive"));
        }
        if !(theta.is_finite() && (0.0..=PI).contains(&theta)) {
            return Err(Error::invalid("theta", "theta must lie in [0, π]"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "phi must be finite"));
        }
        if r1.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("r1", "position must be finite"));
        }
        Ok(Geometry {
            r,
            theta,
            phi: phi.rem_euclid(TAU),
            r1,
        })
    }

    /// Geometry with atom 1 at the default position `(0.05λ, 0, 0)`.
    pub fn with_default_r1(r: f64, theta: f64, phi: f64) -> Result<Self> {
        Self::new(r, theta, phi, DEFAULT_R1)
    }

    pub fn unit_separation(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    pub fn r1(&self) -> Vector3<f64> {
        Vector3::from(self.r1)
    }

    pub fn r2(&self) -> Vector3<f64> {
        self.r1() + self.unit_separation() * self.r
    }

    /// Dimensionless separation `η = k0 R`.
    pub fn eta(&self) -> f64 {
        K0 * self.r
    }
}

/// Transition dipoles `d1 = D ε(+)`, `d2 = D e_z`, `d3 = −D ε(−)` with `D = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleBasis {
    pub d: [Vector3<C64>; 3],
}

impl DipoleBasis {
    pub fn standard() -> Self {
        let s = FRAC_1_SQRT_2;
        let eps_plus = Vector3::new(C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, 0.0));
        let eps_minus = Vector3::new(C64::new(s, 0.0), C64::new(0.0, -s), C64::new(0.0, 0.0));
        let ez = Vector3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        DipoleBasis {
            d: [eps_plus, ez, -eps_minus],
        }
    }

    /// Dipole of transition `|i⟩ ↔ |4⟩`, `i ∈ {1, 2, 3}`.
    pub fn dipole(&self, i: usize) -> &Vector3<C64> {
        &self.d[i - 1]
    }
}

impl Default for DipoleBasis {
    fn default() -> Self {
        Self::standard()
    }
}

/// Laser drive: a standing wave along x, polarized along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Peak Rabi frequency `Ω` at the antinodes.
    #[serde(rename = "Omega")]
    pub omega0: f64,
    /// `Δ_i = ω_L − ω_i` for the three excited sublevels.
    #[serde(default)]
    pub detunings: [f64; 3],
}

impl DriveConfig {
    pub fn new(omega0: f64) -> Result<Self> {
        Self::with_detunings(omega0, [0.0; 3])
    }

    pub fn with_detunings(omega0: f64, detunings: [f64; 3]) -> Result<Self> {
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::invalid("Omega", "Omega must be non-negative"));
        }
        if detunings.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("detunings", "detunings must be finite"));
        }
        Ok(DriveConfig { omega0, detunings })
    }

    /// Laser wave vector, `+x` with magnitude `2π/λ`.
    pub fn wave_vector(&self) -> Vector3<f64> {
        Vector3::new(K0, 0.0, 0.0)
    }
}

/// Coherent (`Ω_ij`) and incoherent (`Γ_ij`) couplings plus the local Rabi
/// frequencies. Matrix entry `(i-1, j-1)` holds the `ij` constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet {
    pub omega: Matrix3<C64>,
    pub gamma: Matrix3<C64>,
    pub rabi1: f64,
    pub rabi2: f64,
    pub eta: f64,
}

impl CouplingSet {
    pub fn compute(g: &Geometry, d: &DriveConfig) -> Result<Self> {
        let (rabi1, rabi2) = rabi_frequencies(g, d);
        Ok(CouplingSet {
            omega: coherent_couplings(g)?,
            gamma: incoherent_couplings(g)?,
            rabi1,
            rabi2,
            eta: g.eta(),
        })
    }

    /// `Ω_ij` with 1-based indices.
    pub fn omega_ij(&self, i: usize, j: usize) -> C64 {
        self.omega[(i - 1, j - 1)]
    }

    /// `Γ_ij` with 1-based indices.
    pub fn gamma_ij(&self, i: usize, j: usize) -> C64 {
        self.gamma[(i - 1, j - 1)]
    }

    /// Signed `Ω_22` (real for every geometry).
    pub fn omega22(&self) -> f64 {
        self.omega[(1, 1)].re
    }

    /// True when the couplings between orthogonal dipoles that involve the
    /// driven `|2⟩` sublevel vanish, so levels `|1⟩, |3⟩` stay empty.
    pub fn is_two_level(&self) -> bool {
        let scale = self.omega.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let tol = 1e-12 * scale;
        self.omega[(1, 0)].norm() < tol
            && self.omega[(2, 1)].norm() < tol
            && self.gamma[(1, 0)].norm() < 1e-12
            && self.gamma[(2, 1)].norm() < 1e-12
    }
}

/// `χ_kl(R)` scaled so that `d_iᵀ Re(χ) d_j*` is directly in units of γ.
pub fn coupling_tensor(g: &Geometry) -> Result<Matrix3<C64>> {
    if !(g.r > 0.0) {
        return Err(Error::CoincidentAtoms);
    }
    let eta = g.eta();
    let (e1, e2, e3) = (eta, eta * eta, eta * eta * eta);
    let iso = C64::new(1.0 / e1 - 1.0 / e3, 1.0 / e2);
    let aniso = C64::new(1.0 / e1 - 3.0 / e3, 3.0 / e2);
    let phase = C64::from_polar(TENSOR_PREFACTOR, eta);
    let u = g.unit_separation();
    Ok(Matrix3::from_fn(|k, l| {
        let delta = if k == l { 1.0 } else { 0.0 };
        (iso * delta - aniso * (u[k] * u[l])) * phase
    }))
}

/// `d_iᵀ X d_j*` for every pair of transitions.
fn project(x: &Matrix3<f64>, basis: &DipoleBasis) -> Matrix3<C64> {
    let xc = x.map(|v| C64::new(v, 0.0));
    Matrix3::from_fn(|i, j| {
        let dj = basis.d[j].map(|z| z.conj());
        basis.d[i].dot(&(xc * dj))
    })
}

/// `Ω_ij` evaluated directly from the coupling tensor.
pub fn tensor_coherent_couplings(g: &Geometry) -> Result<Matrix3<C64>> {
    let chi = coupling_tensor(g)?;
    Ok(project(&chi.map(|z| z.re), &DipoleBasis::standard()))
}

/// `Γ_ij` evaluated directly from the coupling tensor.
pub fn tensor_incoherent_couplings(g: &Geometry) -> Result<Matrix3<C64>> {
    let chi = coupling_tensor(g)?;
    Ok(project(&chi.map(|z| z.im), &DipoleBasis::standard()))
}

/// Radial pieces of the closed forms. `c` and `s` are either `(cos η, sin η)`
/// for the coherent part or `(sin η, −cos η)` for the incoherent part.
struct Radial {
    diag: f64,
    cross: f64,
}

fn radial(eta: f64, c: f64, s: f64, cos2t: f64) -> Radial {
    let e2 = eta * eta;
    let e3 = e2 * eta;
    Radial {
        diag: 3.0 / (8.0 * e3) * ((3.0 * e2 - 1.0 + (e2 - 3.0) * cos2t) * c - eta * (1.0 + 3.0 * cos2t) * s),
        cross: 3.0 / (4.0 * e3) * ((e2 - 3.0) * c - 3.0 * eta * s),
    }
}

/// Fills the full Hermitian 3×3 table from `X_11`, `f = X_31 / (sin²θ e^{−2iφ})`.
///
/// `cotθ sin²θ` and `(2cot²θ − 1) sin²θ` are written as `sinθ cosθ` and
/// `2cos²θ − sin²θ` so the poles at `θ ∈ {0, π}` never appear.
fn assemble(x11: f64, f: f64, theta: f64, phi: f64) -> Matrix3<C64> {
    let (st, ct) = theta.sin_cos();
    let x31 = C64::from_polar(f * st * st, -2.0 * phi);
    let x21 = C64::from_polar(-SQRT_2 * f * st * ct, -phi);
    let x22 = x11 - f * (2.0 * ct * ct - st * st);
    let x32 = -x21;
    let d = |v: f64| C64::new(v, 0.0);
    Matrix3::new(
        d(x11),
        x21.conj(),
        x31.conj(),
        x21,
        d(x22),
        x32.conj(),
        x31,
        x32,
        d(x11),
    )
}

/// Closed-form coherent couplings `Ω_ij` (units of γ).
pub fn coherent_couplings(g: &Geometry) -> Result<Matrix3<C64>> {
    if !(g.r > 0.0) {
        return Err(Error::CoincidentAtoms);
    }
    let eta = g.eta();
    let (s, c) = eta.sin_cos();
    let rad = radial(eta, c, s, (2.0 * g.theta).cos());
    Ok(assemble(rad.diag, rad.cross, g.theta, g.phi))
}

/// Closed-form incoherent couplings `Γ_ij` (units of γ).
pub fn incoherent_couplings(g: &Geometry) -> Result<Matrix3<C64>> {
    if !(g.r > 0.0) {
        return Err(Error::CoincidentAtoms);
    }
    let eta = g.eta();
    let (s, c) = eta.sin_cos();
    let rad = radial(eta, s, -c, (2.0 * g.theta).cos());
    Ok(assemble(rad.diag, rad.cross, g.theta, g.phi))
}

/// `Ω_11` at `θ = 0`: coupling of dipoles perpendicular to the separation.
pub fn omega11_axial(eta: f64) -> f64 {
    let (s, c) = eta.sin_cos();
    1.5 / eta.powi(3) * ((eta * eta - 1.0) * c - eta * s)
}

/// `Ω_22` at `θ = 0`: coupling of dipoles parallel to the separation.
pub fn omega22_axial(eta: f64) -> f64 {
    let (s, c) = eta.sin_cos();
    3.0 / eta.powi(3) * (c + eta * s)
}

/// Position-dependent Rabi frequencies `Ω sin(k_L · r_μ)` (signed).
pub fn rabi_frequencies(g: &Geometry, d: &DriveConfig) -> (f64, f64) {
    let k = d.wave_vector();
    (
        d.omega0 * k.dot(&g.r1()).sin(),
        d.omega0 * k.dot(&g.r2()).sin(),
    )
}
