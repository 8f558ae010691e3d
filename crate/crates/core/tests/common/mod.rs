//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use ddi_fluor::dressed::spectral_extent;
use ddi_fluor::geometry::{DriveConfig, Geometry};
use ddi_fluor::hilbert::DensityMatrix;
use ddi_fluor::liouville::{vectorize, Liouvillian, Propagator, Rk4Scratch};
use ddi_fluor::observables::{detection_operator, Channel, Detector, DetuningGrid, Spectrum, System};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

/// A named forward-model configuration.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub omega: f64,
    pub detector: Detector,
}

impl Case {
    pub fn system(&self) -> System {
        let g = Geometry::with_default_r1(self.r, self.theta, self.phi).unwrap();
        System::new(g, DriveConfig::new(self.omega).unwrap()).unwrap()
    }

    pub fn grid(&self, sys: &System, count: usize) -> Vec<f64> {
        DetuningGrid::symmetric(1.3 * spectral_extent(&sys.couplings), count)
            .unwrap()
            .points()
    }

    pub fn spectrum(&self, count: usize) -> (System, Spectrum) {
        let sys = self.system();
        let grid = self.grid(&sys, count);
        let s = sys.spectrum(&self.detector, &grid).unwrap();
        (sys, s)
    }
}

/// Two independent Mollow emitters, π light along +y.
pub const MOLLOW_PAIR: Case = Case {
    r: 0.3,
    theta: FRAC_PI_2,
    phi: 0.0,
    omega: 100.0,
    detector: Detector { direction: [0.0, 1.0, 0.0], channel: Channel::Pi, include_position_phase: true },
};

/// Strong drive, sidebands split by the dipole-dipole coupling.
pub const SPLIT_SIDEBANDS: Case = Case {
    r: 0.08,
    theta: FRAC_PI_2,
    phi: 0.0,
    omega: 200.0,
    detector: Detector { direction: [0.0, 1.0, 0.0], channel: Channel::Pi, include_position_phase: true },
};

/// Dipole-dipole dominated, perturbed by a moderate drive.
pub const PERTURBED_DDI: Case = Case {
    r: 0.04,
    theta: FRAC_PI_2,
    phi: 0.0,
    omega: 75.0,
    detector: Detector { direction: [0.0, 1.0, 0.0], channel: Channel::Pi, include_position_phase: true },
};

/// Dipole-dipole dominated, weak drive.
pub const DDI_DOMINATED: Case = Case {
    r: 0.04,
    theta: FRAC_PI_2,
    phi: 0.0,
    omega: 20.0,
    detector: Detector { direction: [0.0, 1.0, 0.0], channel: Channel::Pi, include_position_phase: true },
};

/// Out-of-plane orientation with weak drive; total light along +y.
pub const TILTED: Case = Case {
    r: 0.04,
    theta: PI / 5.0,
    phi: PI / 15.0,
    omega: 20.0,
    detector: Detector { direction: [0.0, 1.0, 0.0], channel: Channel::Total, include_position_phase: true },
};

/// In-plane pair at an angle to the laser, strongly driven; π light along −x.
pub const WAVEGUIDE: Case = Case {
    r: 0.07,
    theta: FRAC_PI_2,
    phi: 0.1 * PI,
    omega: 350.0,
    detector: Detector { direction: [-1.0, 0.0, 0.0], channel: Channel::Pi, include_position_phase: true },
};

pub fn with(case: Case, f: impl FnOnce(&mut Case)) -> Case {
    let mut c = case;
    f(&mut c);
    c
}

/// Coupling tensor evaluated from scratch: `(3/2)[δ A − R̂R̂ B] e^{iη}`.
pub fn oracle_tensor(r: f64, theta: f64, phi: f64) -> Matrix3<C64> {
    let eta = 2.0 * PI * r;
    let i = C64::new(0.0, 1.0);
    let a = 1.0 / eta + i / eta.powi(2) - 1.0 / eta.powi(3);
    let b = 1.0 / eta + 3.0 * i / eta.powi(2) - 3.0 / eta.powi(3);
    let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let ph = C64::from_polar(1.5, eta);
    Matrix3::from_fn(|k, l| {
        let delta = if k == l { 1.0 } else { 0.0 };
        (a * delta - b * u[k] * u[l]) * ph
    })
}

/// `d_iᵀ X d_j*` with the standard spherical dipoles, written out by hand.
pub fn oracle_project(x: &Matrix3<f64>) -> Matrix3<C64> {
    let s = 1.0 / 2f64.sqrt();
    let z = C64::new(0.0, 0.0);
    let d = [
        Vector3::new(C64::new(s, 0.0), C64::new(0.0, s), z),
        Vector3::new(z, z, C64::new(1.0, 0.0)),
        Vector3::new(C64::new(-s, 0.0), C64::new(0.0, s), z),
    ];
    Matrix3::from_fn(|i, j| {
        let mut acc = z;
        for k in 0..3 {
            for l in 0..3 {
                acc += d[i][k] * x[(k, l)] * d[j][l].conj();
            }
        }
        acc
    })
}

/// Simpson weights for `n` (odd) uniformly spaced samples.
fn simpson_weight(k: usize, n: usize) -> f64 {
    if k == 0 || k + 1 == n {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Time-domain regression oracle:
/// `S(ω) = Re ∫₀^∞ Tr[E⁻ e^{Lτ}(E⁺ρ − ⟨E⁺⟩ρ)] e^{−iωτ} dτ`, summed over field
/// components. The correlation is propagated with RK4 until it has decayed to
/// `decay_tol` of its initial norm (capped at `tau_cap`) and integrated with
/// Simpson's rule.
pub fn time_domain_spectrum(
    l: &Liouvillian,
    rho: &DensityMatrix,
    det: &Detector,
    g: &Geometry,
    grid: &[f64],
    decay_tol: f64,
    tau_cap: f64,
) -> (Vec<f64>, f64) {
    let ops = detection_operator(det, g).unwrap();
    let dt = Propagator::default_dt(l).min(2e-3);
    let prop = Propagator::new(l, Some(dt));
    let mut out = vec![0.0; grid.len()];
    let mut tau_used: f64 = 0.0;
    for (m, p) in ops.minus.iter().zip(&ops.plus) {
        if m.matrix.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let mean = rho.expect(p);
        let b = p.matrix * rho.rho - rho.rho * mean;
        let mut x = vectorize(&b);
        let u = vectorize(&m.matrix.transpose());
        let norm0 = x.norm();
        let mut c = vec![u.dot(&x)];
        let mut scratch = Rk4Scratch::default();
        // Chunks of an even number of steps keep the sample count odd.
        let chunk = 2 * ((0.5 / dt).ceil() as usize);
        loop {
            for _ in 0..chunk {
                prop.step_with(x.as_mut_slice(), dt, &mut scratch);
                c.push(u.dot(&x));
            }
            let t = (c.len() - 1) as f64 * dt;
            if x.norm() < decay_tol * norm0 || t >= tau_cap {
                tau_used = tau_used.max(t);
                break;
            }
        }
        let n = c.len();
        for (o, &w) in out.iter_mut().zip(grid) {
            let mut acc = C64::new(0.0, 0.0);
            let rot = C64::from_polar(1.0, -w * dt);
            let mut ph = C64::new(1.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                acc += ck * ph * simpson_weight(k, n);
                ph *= rot;
            }
            *o += (acc * dt / 3.0).re;
        }
    }
    (out, tau_used)
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn l2_relative(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Every element of `small` has a partner in `large` within `tol`.
pub fn covered(small: &[f64], large: &[f64], tol: f64) -> bool {
    small.iter().all(|x| large.iter().any(|y| (x - y).abs() <= tol))
}
