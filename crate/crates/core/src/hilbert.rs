//! Two-atom operator algebra and the interaction-picture Hamiltonian.
//!
//! Product basis `|i⟩₁ ⊗ |j⟩₂` with `i, j ∈ {1, 2, 3, 4}` and `|4⟩` the ground
//! state; the basis index is `4(i−1) + (j−1)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::SMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{CouplingSet, DriveConfig};

pub const DIM: usize = 16;
pub type Op16 = SMatrix<C64, DIM, DIM>;

/// Index of `|i⟩₁ ⊗ |j⟩₂` (1-based levels).
pub fn basis_index(i: usize, j: usize) -> usize {
    4 * (i - 1) + (j - 1)
}

/// Which of the two atoms an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::First, Atom::Second];

    pub fn other(self) -> Atom {
        match self {
            Atom::First => Atom::Second,
            Atom::Second => Atom::First,
        }
    }
}

/// A 16×16 operator on the two-atom space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomOperator {
    pub matrix: Op16,
}

impl AtomOperator {
    pub fn zero() -> Self {
        AtomOperator { matrix: Op16::zeros() }
    }

    pub fn identity() -> Self {
        AtomOperator { matrix: Op16::identity() }
    }

    /// `S_{i+}^{(μ)} = |i_μ⟩⟨4_μ|`, identity on the other atom.
    pub fn raising(atom: Atom, i: usize) -> Self {
        assert!((1..=3).contains(&i), "transition index must be 1, 2 or 3");
        let mut m = Op16::zeros();
        for k in 1..=4 {
            let (row, col) = match atom {
                Atom::First => (basis_index(i, k), basis_index(4, k)),
                Atom::Second => (basis_index(k, i), basis_index(k, 4)),
            };
            m[(row, col)] = C64::new(1.0, 0.0);
        }
        AtomOperator { matrix: m }
    }

    /// `S_{i−}^{(μ)} = (S_{i+}^{(μ)})†`.
    pub fn lowering(atom: Atom, i: usize) -> Self {
        Self::raising(atom, i).adjoint()
    }

    /// Projector `|a⟩⟨a|` on level `a` of one atom.
    pub fn projector(atom: Atom, a: usize) -> Self {
        let mut m = Op16::zeros();
        for k in 1..=4 {
            let idx = match atom {
                Atom::First => basis_index(a, k),
                Atom::Second => basis_index(k, a),
            };
            m[(idx, idx)] = C64::new(1.0, 0.0);
        }
        AtomOperator { matrix: m }
    }

    pub fn adjoint(&self) -> Self {
        AtomOperator {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        AtomOperator { matrix: self.matrix * z }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.matrix - self.matrix.adjoint()).camax() <= tol
    }
}

impl Add for AtomOperator {
    type Output = AtomOperator;
    fn add(self, rhs: Self) -> Self {
        AtomOperator {
            matrix: self.matrix + rhs.matrix,
        }
    }
}

impl Sub for AtomOperator {
    type Output = AtomOperator;
    fn sub(self, rhs: Self) -> Self {
        AtomOperator {
            matrix: self.matrix - rhs.matrix,
        }
    }
}

impl Mul for AtomOperator {
    type Output = AtomOperator;
    fn mul(self, rhs: Self) -> Self {
        AtomOperator {
            matrix: self.matrix * rhs.matrix,
        }
    }
}

/// Two-atom density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub rho: Op16,
}

impl DensityMatrix {
    /// Both atoms in `|4⟩`.
    pub fn ground() -> Self {
        Self::pure(basis_index(4, 4))
    }

    /// Pure basis state with the given product-basis index.
    pub fn pure(index: usize) -> Self {
        let mut rho = Op16::zeros();
        rho[(index, index)] = C64::new(1.0, 0.0);
        DensityMatrix { rho }
    }

    /// Checks hermiticity and trace to 1e-10 and eigenvalues ≥ −1e-8.
    pub fn new(rho: Op16) -> Result<Self> {
        let dm = DensityMatrix { rho };
        let herm = (rho - rho.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::invalid("rho", format!("not Hermitian (deviation {herm:.2e})")));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::invalid("rho", format!("trace {tr} differs from 1")));
        }
        let min = dm.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:.2e}")));
        }
        Ok(dm)
    }

    /// Symmetrizes and rescales to unit trace.
    pub fn normalized(rho: Op16) -> Self {
        let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        DensityMatrix {
            rho: h / C64::new(tr, 0.0),
        }
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn expect(&self, op: &AtomOperator) -> C64 {
        (op.matrix * self.rho).trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Steady population of level `a` of one atom.
    pub fn population(&self, atom: Atom, a: usize) -> f64 {
        self.expect(&AtomOperator::projector(atom, a)).re
    }
}

/// `H = H_A + H_L + H_Ω` in the frame rotating at the laser frequency.
///
/// * `H_A = −Σ_μ Σ_i Δ_i S_{i+}^{(μ)} S_{i−}^{(μ)}`
/// * `H_L = −½ Σ_μ Ω(r_μ) (S_{2+}^{(μ)} + S_{2−}^{(μ)})` — the z-polarized
///   laser drives only `|2⟩ ↔ |4⟩`.
/// * `H_Ω = −Σ_{ij} Ω_ij (S_{i+}^{(2)} S_{j−}^{(1)} + S_{i+}^{(1)} S_{j−}^{(2)})`
pub fn build_hamiltonian(drive: &DriveConfig, c: &CouplingSet) -> AtomOperator {
    let mut h = Op16::zeros();
    for atom in Atom::BOTH {
        for i in 1..=3 {
            let n = AtomOperator::raising(atom, i) * AtomOperator::lowering(atom, i);
            h -= n.matrix * C64::new(drive.detunings[i - 1], 0.0);
        }
        let rabi = match atom {
            Atom::First => c.rabi1,
            Atom::Second => c.rabi2,
        };
        let s = AtomOperator::raising(atom, 2);
        h -= (s.matrix + s.matrix.adjoint()) * C64::new(0.5 * rabi, 0.0);
    }
    for i in 1..=3 {
        for j in 1..=3 {
            let w = c.omega_ij(i, j);
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let a = AtomOperator::raising(Atom::Second, i) * AtomOperator::lowering(Atom::First, j);
            let b = AtomOperator::raising(Atom::First, i) * AtomOperator::lowering(Atom::Second, j);
            h -= (a.matrix + b.matrix) * w;
        }
    }
    AtomOperator { matrix: h }
}
