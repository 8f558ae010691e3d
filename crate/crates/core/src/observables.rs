//! Far-field detection, fluorescence intensity and the incoherent spectrum.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DVector, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CouplingSet, DipoleBasis, DriveConfig, Geometry, K0};
use crate::hilbert::{build_hamiltonian, Atom, AtomOperator, DensityMatrix};
use crate::linalg::{ShiftedSolver, Workspace};
use crate::liouville::{steady_state, vectorize, Liouvillian};

/// Polarization filter in front of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Linear polarization: the `|2⟩ ↔ |4⟩` dipole only.
    Pi,
    /// Circular polarization: the `|1⟩, |3⟩ ↔ |4⟩` dipoles.
    Sigma,
    Total,
}

impl Channel {
    pub fn transitions(self) -> &'static [usize] {
        match self {
            Channel::Pi => &[2],
            Channel::Sigma => &[1, 3],
            Channel::Total => &[1, 2, 3],
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Pi => "pi",
            Channel::Sigma => "sigma",
            Channel::Total => "total",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi" => Ok(Channel::Pi),
            "sigma" => Ok(Channel::Sigma),
            "total" => Ok(Channel::Total),
            _ => Err(Error::invalid("channel", format!("unknown channel '{s}' (pi, sigma, total)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    /// Unit vector from the atoms towards the detector.
    pub direction: [f64; 3],
    pub channel: Channel,
    /// Include the far-field phase `e^{i k0 r̂·r_μ}` of each atom.
    #[serde(default = "default_true")]
    pub include_position_phase: bool,
}

fn default_true() -> bool {
    true
}

impl Detector {
    pub fn new(direction: [f64; 3], channel: Channel) -> Result<Self> {
        let n = Vector3::from(direction).norm();
        if !((n - 1.0).abs() < 1e-9) {
            return Err(Error::invalid("direction", "detector direction must be a unit vector"));
        }
        Ok(Detector {
            direction,
            channel,
            include_position_phase: true,
        })
    }

    pub fn plus_y(channel: Channel) -> Self {
        Self::new([0.0, 1.0, 0.0], channel).unwrap()
    }

    pub fn minus_x(channel: Channel) -> Self {
        Self::new([-1.0, 0.0, 0.0], channel).unwrap()
    }

    pub fn plus_z(channel: Channel) -> Self {
        Self::new([0.0, 0.0, 1.0], channel).unwrap()
    }

    pub fn without_position_phase(mut self) -> Self {
        self.include_position_phase = false;
        self
    }
}

/// Cartesian components of the negative-frequency field `E⁻` and `E⁺ = (E⁻)†`.
#[derive(Debug, Clone)]
pub struct DetectionOperators {
    pub minus: [AtomOperator; 3],
    pub plus: [AtomOperator; 3],
}

impl DetectionOperators {
    /// Components with nonzero weight.
    fn active(&self) -> impl Iterator<Item = (&AtomOperator, &AtomOperator)> {
        self.minus
            .iter()
            .zip(&self.plus)
            .filter(|(m, _)| m.matrix.iter().any(|z| z.norm() > 0.0))
    }
}

/// `E⁻ ∝ Σ_μ Σ_{i∈channel} [r̂ × (r̂ × d_i)] e^{i k0 r̂·r_μ} S_{i+}^{(μ)}`.
pub fn detection_operator(det: &Detector, g: &Geometry) -> Result<DetectionOperators> {
    let rhat = Vector3::from(det.direction);
    if ((rhat.norm() - 1.0).abs()) > 1e-9 {
        return Err(Error::invalid("direction", "detector direction must be a unit vector"));
    }
    let rc = rhat.map(|x| C64::new(x, 0.0));
    let basis = DipoleBasis::standard();
    let weights: Vec<(usize, Vector3<C64>)> = det
        .channel
        .transitions()
        .iter()
        .map(|&i| {
            let d = basis.dipole(i);
            (i, rc * rc.dot(d) - d)
        })
        .collect();
    let radiated = weights.iter().map(|(_, w)| w.norm()).fold(0.0, f64::max);
    if radiated < 1e-12 {
        return Err(Error::NoRadiation(match det.channel {
            Channel::Pi => "π light not radiated along z",
            _ => "selected transitions do not radiate towards the detector",
        }));
    }

    let mut minus = [AtomOperator::zero(); 3];
    for (atom, pos) in [(Atom::First, g.r1()), (Atom::Second, g.r2())] {
        let phase = if det.include_position_phase {
            C64::from_polar(1.0, K0 * rhat.dot(&pos))
        } else {
            C64::new(1.0, 0.0)
        };
        for (i, w) in &weights {
            let s = AtomOperator::raising(atom, *i);
            for (c, op) in minus.iter_mut().enumerate() {
                if w[c] != C64::new(0.0, 0.0) {
                    *op = *op + s.scale(w[c] * phase);
                }
            }
        }
    }
    let plus = minus.map(|m| m.adjoint());
    Ok(DetectionOperators { minus, plus })
}

/// Steady-state intensity `Σ_c ⟨E⁻_c E⁺_c⟩`.
pub fn intensity(rho: &DensityMatrix, det: &Detector, g: &Geometry) -> Result<f64> {
    let ops = detection_operator(det, g)?;
    Ok(ops.active().map(|(m, p)| rho.expect(&(*m * *p)).re).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Raw,
    Max1,
}

/// Uniform detuning grid `ω − ω_L` (units of γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl DetuningGrid {
    pub const DEFAULT_COUNT: usize = 2001;

    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("grid.count", "at least two grid points are required"));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid("grid", "grid.min must be below grid.max"));
        }
        Ok(DetuningGrid { min, max, count })
    }

    /// `count` points on `[−span, span]`.
    pub fn symmetric(span: f64, count: usize) -> Result<Self> {
        Self::new(-span, span, count)
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.max } else { self.min + step * k as f64 })
            .collect()
    }
}

/// Sampled incoherent fluorescence spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub detuning_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub channel: Channel,
    pub direction: [f64; 3],
    pub normalization: Normalization,
    /// Grid indices where the shifted system was singular and regularized.
    #[serde(default)]
    pub regularized: Vec<usize>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescaled so the largest value is 1.
    pub fn normalized(&self) -> Spectrum {
        let m = self.max_value();
        let mut s = self.clone();
        if m > 0.0 {
            s.values.iter_mut().for_each(|v| *v /= m);
        }
        s.normalization = Normalization::Max1;
        s
    }

    /// CSV with header `detuning_gamma,intensity`, 15 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "detuning_gamma,intensity")?;
        for (x, y) in self.detuning_grid.iter().zip(&self.values) {
            writeln!(w, "{},{}", decimal(*x), decimal(*y))?;
        }
        Ok(())
    }
}

/// Plain decimal (no exponent) with 15 significant digits.
pub fn decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.1}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (14 - mag).max(1) as usize;
    format!("{x:.decimals$}")
}

/// Quantum-regression spectrum
/// `S(ω) = −Re Σ_c Tr[E⁻_c x_c]` with `(L − iω) x_c = vec(E⁺_c ρ − ⟨E⁺_c⟩ ρ)`.
///
/// The stationary zero mode is deflated first (`L − vec(ρ) vec(I)ᵀ`), which
/// leaves solutions for the traceless right-hand sides unchanged but keeps the
/// system regular at `ω = 0`. Grid points are solved in parallel.
pub fn spectrum(l: &Liouvillian, rho: &DensityMatrix, det: &Detector, g: &Geometry, grid: &[f64]) -> Result<Spectrum> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "detuning grid is empty"));
    }
    let ops = detection_operator(det, g)?;
    let solver = ShiftedSolver::new(l.deflated(rho));

    let mut rhs = Vec::new();
    let mut functionals = Vec::new();
    for (m, p) in ops.active() {
        let mean = rho.expect(p);
        let b = p.matrix * rho.rho - rho.rho * mean;
        rhs.push(solver.reduce_rhs(&vectorize(&b)));
        let u: DVector<C64> = vectorize(&m.matrix.transpose());
        functionals.push(solver.reduce_functional(&u));
    }

    let solved: Vec<(f64, bool)> = grid
        .par_iter()
        .map_init(Workspace::default, |ws, &w| {
            let sol = solver.solve(C64::new(0.0, w), &rhs, ws);
            let s: f64 = sol
                .reduced
                .iter()
                .zip(&functionals)
                .map(|(y, u)| -u.iter().zip(y).map(|(a, b)| a * b).sum::<C64>().re)
                .sum();
            (s, sol.regularized)
        })
        .collect();

    if solved.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::Numerical("spectrum solve produced non-finite values".into()));
    }
    Ok(Spectrum {
        detuning_grid: grid.to_vec(),
        values: solved.iter().map(|(s, _)| *s).collect(),
        channel: det.channel,
        direction: det.direction,
        normalization: Normalization::Raw,
        regularized: solved
            .iter()
            .enumerate()
            .filter_map(|(k, (_, r))| r.then_some(k))
            .collect(),
    })
}

/// Full forward model for one geometry: couplings, Liouvillian and steady state.
#[derive(Debug, Clone)]
pub struct System {
    pub geometry: Geometry,
    pub drive: DriveConfig,
    pub couplings: CouplingSet,
    pub hamiltonian: AtomOperator,
    pub liouvillian: Liouvillian,
    pub steady: crate::liouville::SteadyState,
}

impl System {
    pub fn new(geometry: Geometry, drive: DriveConfig) -> Result<Self> {
        let couplings = CouplingSet::compute(&geometry, &drive)?;
        let hamiltonian = build_hamiltonian(&drive, &couplings);
        let liouvillian = Liouvillian::build(&hamiltonian, &couplings);
        let steady = steady_state(&liouvillian)?;
        Ok(System {
            geometry,
            drive,
            couplings,
            hamiltonian,
            liouvillian,
            steady,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.steady.rho
    }

    pub fn spectrum(&self, det: &Detector, grid: &[f64]) -> Result<Spectrum> {
        spectrum(&self.liouvillian, &self.steady.rho, det, &self.geometry, grid)
    }

    pub fn intensity(&self, det: &Detector) -> Result<f64> {
        intensity(&self.steady.rho, det, &self.geometry)
    }
}

/// Geometry for a relative rotation `Δθ` about the laser polarization axis,
/// starting from `g_base`. Angles outside `[0, π]` are folded back using
/// `(θ, φ) ≡ (2π − θ, φ + π)`.
fn rotated(g_base: &Geometry, dtheta: f64) -> Result<Geometry> {
    let t = dtheta.rem_euclid(TAU);
    let (theta, phi) = if t > std::f64::consts::PI {
        (TAU - t, g_base.phi + std::f64::consts::PI)
    } else {
        (t, g_base.phi)
    };
    Geometry::new(g_base.r, theta, phi, g_base.r1)
}

/// σ-polarized intensity along `+z` as the pair is rotated to `θ = Δθ`.
pub fn sigma_intensity_scan(g_base: &Geometry, d: &DriveConfig, dtheta_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let det = Detector::plus_z(Channel::Sigma);
    dtheta_grid
        .par_iter()
        .map(|&dt| {
            let g = rotated(g_base, dt)?;
            let sys = System::new(g, *d)?;
            Ok((dt, sys.intensity(&det)?))
        })
        .collect()
}
