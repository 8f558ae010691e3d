//! Liouvillian superoperator, steady state and RK4 time propagation.
//!
//! Density matrices are vectorized column-major: `vec(ρ)[r + 16c] = ρ[r, c]`,
//! so that `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::CouplingSet;
use crate::hilbert::{Atom, AtomOperator, DensityMatrix, Op16, DIM};

pub const LDIM: usize = DIM * DIM;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Generator of `∂ρ/∂t = L[ρ]` on column-major vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub superop: DMatrix<C64>,
}

/// Position of `ρ[r, c]` in `vec(ρ)`.
#[inline]
pub fn vec_index(r: usize, c: usize) -> usize {
    r + DIM * c
}

pub fn vectorize(m: &Op16) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>) -> Op16 {
    Op16::from_column_slice(v.as_slice())
}

/// `vec(I)`: the row `vec(I)ᵀ x` extracts the trace.
pub fn trace_vector() -> DVector<C64> {
    vectorize(&Op16::identity())
}

/// Adds `coeff · A ρ B` to the superoperator, visiting only nonzero entries.
fn add_sandwich(l: &mut DMatrix<C64>, a: &Op16, b: &Op16, coeff: C64) {
    let nz = |m: &Op16| -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for c in 0..DIM {
            for r in 0..DIM {
                let v = m[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        out
    };
    let (an, bn) = (nz(a), nz(b));
    // (AρB)[i, l] = Σ A[i, j] ρ[j, k] B[k, l]
    for &(i, j, av) in &an {
        for &(k, ll, bv) in &bn {
            l[(vec_index(i, ll), vec_index(j, k))] += coeff * av * bv;
        }
    }
}

/// Lowering channel `(atom, excited level)`.
type DecayChannel = (Atom, usize);

/// Collective decay matrix over the six lowering channels `(μ, i)`:
/// `γ δ_ij` within one atom and `Γ_ij` between the atoms.
fn decay_matrix(c: &CouplingSet) -> Vec<(DecayChannel, DecayChannel, C64)> {
    let mut out = Vec::with_capacity(36);
    for a in Atom::BOTH {
        for i in 1..=3 {
            for b in Atom::BOTH {
                for j in 1..=3 {
                    let g = if a == b {
                        if i == j {
                            C64::new(1.0, 0.0)
                        } else {
                            ZERO
                        }
                    } else {
                        c.gamma_ij(i, j)
                    };
                    if g != ZERO {
                        out.push(((a, i), (b, j), g));
                    }
                }
            }
        }
    }
    out
}

impl Liouvillian {
    /// `L[ρ] = −i[H, ρ] + Σ_{ab} G_ab (2 S_b− ρ S_a+ − S_a+ S_b− ρ − ρ S_a+ S_b−)`.
    ///
    /// With `G_aa = γ` the excited-state population decays at `2γ`.
    pub fn build(h: &AtomOperator, c: &CouplingSet) -> Self {
        let id = Op16::identity();
        let mut l = DMatrix::<C64>::zeros(LDIM, LDIM);
        add_sandwich(&mut l, &h.matrix, &id, C64::new(0.0, -1.0));
        add_sandwich(&mut l, &id, &h.matrix, C64::new(0.0, 1.0));
        for ((a, i), (b, j), g) in decay_matrix(c) {
            let sp = AtomOperator::raising(a, i).matrix;
            let sm = AtomOperator::lowering(b, j).matrix;
            let m = sp * sm;
            add_sandwich(&mut l, &sm, &sp, g * 2.0);
            add_sandwich(&mut l, &m, &id, -g);
            add_sandwich(&mut l, &id, &m, -g);
        }
        Liouvillian { superop: l }
    }

    pub fn apply(&self, rho: &Op16) -> Op16 {
        unvectorize(&(&self.superop * vectorize(rho)))
    }

    /// Largest absolute row sum, `‖L‖∞`.
    pub fn max_row_sum(&self) -> f64 {
        self.superop
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `L − vec(ρ_ss) vec(I)ᵀ`: removes the stationary zero mode without
    /// changing the action on traceless operators.
    pub fn deflated(&self, rho_ss: &DensityMatrix) -> DMatrix<C64> {
        let v = vectorize(&rho_ss.rho);
        &self.superop - &v * trace_vector().transpose()
    }
}

/// Stationary state plus diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L vec(ρ)‖∞`.
    pub residual: f64,
    /// More than one stationary state exists; `rho` is the one reached from
    /// the two-atom ground state.
    pub degenerate: bool,
}

/// Relative singular-value threshold for counting null directions.
const NULL_TOL: f64 = 1e-8;

/// Solves `L ρ = 0` with `Tr ρ = 1`.
///
/// The first row of `L` is replaced by the trace condition and the bordered
/// system is solved by LU. When the null space is degenerate the answer is
/// instead propagated from the ground state.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let sv = l.superop.singular_values();
    let smax = sv.max();
    let null_dim = sv.iter().filter(|&&s| s <= NULL_TOL * smax).count();
    if null_dim > 1 {
        let prop = Propagator::new(l, None);
        let rho = prop.relax(&DensityMatrix::ground(), 1e-12, 1e5)?;
        let residual = (&l.superop * vectorize(&rho.rho)).camax();
        return Ok(SteadyState {
            rho,
            residual,
            degenerate: true,
        });
    }

    let mut a = l.superop.clone();
    let tv = trace_vector();
    a.row_mut(0).copy_from(&tv.transpose());
    let mut rhs = DVector::<C64>::zeros(LDIM);
    rhs[0] = C64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("steady-state system is singular".into()))?;
    let rho = DensityMatrix::normalized(unvectorize(&x));
    let residual = (&l.superop * vectorize(&rho.rho)).camax();
    if !residual.is_finite() {
        return Err(Error::Numerical("steady state is not finite".into()));
    }
    Ok(SteadyState {
        rho,
        residual,
        degenerate: false,
    })
}

/// Stage buffers for [`Propagator::step_with`].
#[derive(Debug, Clone, Default)]
pub struct Rk4Scratch {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

/// Fixed-step RK4 integrator over a sparse copy of `L`.
#[derive(Debug, Clone)]
pub struct Propagator {
    csr: CsrMatrix<C64>,
    pub dt: f64,
}

impl Propagator {
    /// Default step `0.5 / ‖L‖∞`, well inside the RK4 stability region.
    pub fn default_dt(l: &Liouvillian) -> f64 {
        0.5 / l.max_row_sum().max(1e-12)
    }

    pub fn new(l: &Liouvillian, dt: Option<f64>) -> Self {
        let mut coo = CooMatrix::new(LDIM, LDIM);
        for c in 0..LDIM {
            for r in 0..LDIM {
                let v = l.superop[(r, c)];
                if v != ZERO {
                    coo.push(r, c, v);
                }
            }
        }
        Propagator {
            csr: CsrMatrix::from(&coo),
            dt: dt.unwrap_or_else(|| Self::default_dt(l)),
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let (offsets, cols, vals) = (self.csr.row_offsets(), self.csr.col_indices(), self.csr.values());
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in offsets[r]..offsets[r + 1] {
                acc += vals[k] * x[cols[k]];
            }
            *o = acc;
        }
    }

    /// One RK4 step of size `h`, in place.
    pub fn step(&self, x: &mut [C64], h: f64) {
        self.step_with(x, h, &mut Rk4Scratch::default());
    }

    /// As [`Propagator::step`], reusing caller-owned stage buffers.
    pub fn step_with(&self, x: &mut [C64], h: f64, s: &mut Rk4Scratch) {
        let n = x.len();
        for v in [&mut s.k1, &mut s.k2, &mut s.k3, &mut s.k4, &mut s.tmp] {
            v.resize(n, ZERO);
        }
        self.apply(x, &mut s.k1);
        stage(&mut s.tmp, x, &s.k1, 0.5 * h);
        self.apply(&s.tmp, &mut s.k2);
        stage(&mut s.tmp, x, &s.k2, 0.5 * h);
        self.apply(&s.tmp, &mut s.k3);
        stage(&mut s.tmp, x, &s.k3, h);
        self.apply(&s.tmp, &mut s.k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (s.k1[i] + (s.k2[i] + s.k3[i]) * 2.0 + s.k4[i]) * (h / 6.0);
        }
    }

    /// Propagates a vectorized operator over `t` using whole steps of at most `dt`.
    pub fn advance(&self, x: &mut [C64], t: f64) {
        if t <= 0.0 {
            return;
        }
        let n = (t / self.dt).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut scratch = Rk4Scratch::default();
        for _ in 0..n {
            self.step_with(x, h, &mut scratch);
        }
    }

    /// Evolves `ρ0` over `t_final`; fails if the trace drifts by more than 1e-4.
    pub fn evolve(&self, rho0: &DensityMatrix, t_final: f64) -> Result<DensityMatrix> {
        let mut x = vectorize(&rho0.rho);
        let tr0 = rho0.trace();
        self.advance(x.as_mut_slice(), t_final);
        let rho = unvectorize(&x);
        let drift = (rho.trace() - tr0).norm();
        if !drift.is_finite() || drift > 1e-4 || rho.iter().any(|z| !z.re.is_finite()) {
            return Err(Error::Unstable {
                drift: if drift.is_finite() { drift } else { f64::INFINITY },
            });
        }
        Ok(DensityMatrix { rho })
    }

    /// Evolves until the change over one unit of time falls below `tol`.
    pub fn relax(&self, rho0: &DensityMatrix, tol: f64, t_max: f64) -> Result<DensityMatrix> {
        let mut rho = *rho0;
        let mut t = 0.0;
        while t < t_max {
            let next = self.evolve(&rho, 1.0)?;
            let change = (next.rho - rho.rho).camax();
            rho = next;
            t += 1.0;
            if change < tol {
                break;
            }
        }
        Ok(DensityMatrix::normalized(rho.rho))
    }
}

/// RK4 propagation of `ρ0` to `t_final`. `dt = None` selects [`Propagator::default_dt`].
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t_final: f64, dt: Option<f64>) -> Result<DensityMatrix> {
    if let Some(h) = dt {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
    }
    Propagator::new(l, dt).evolve(rho0, t_final)
}

/// `out = x + k·a`.
fn stage(out: &mut [C64], x: &[C64], k: &[C64], a: f64) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DriveConfig, Geometry};
    use crate::hilbert::{basis_index, build_hamiltonian};
    use std::f64::consts::FRAC_PI_2;

    fn system(r: f64, theta: f64, phi: f64, omega: f64) -> Liouvillian {
        let g = Geometry::with_default_r1(r, theta, phi).unwrap();
        let d = DriveConfig::new(omega).unwrap();
        let c = CouplingSet::compute(&g, &d).unwrap();
        Liouvillian::build(&build_hamiltonian(&d, &c), &c)
    }

    #[test]
    fn vectorization_is_column_major() {
        let mut m = Op16::zeros();
        m[(2, 5)] = C64::new(1.0, 0.0);
        assert_eq!(vectorize(&m)[vec_index(2, 5)], C64::new(1.0, 0.0));
        assert_eq!(unvectorize(&vectorize(&m)), m);
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = AtomOperator::raising(Atom::First, 2).matrix + AtomOperator::projector(Atom::Second, 1).matrix;
        let b = AtomOperator::lowering(Atom::Second, 3).matrix * C64::new(0.3, -1.2);
        let mut rho = Op16::zeros();
        for (k, z) in rho.iter_mut().enumerate() {
            *z = C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos());
        }
        let mut l = DMatrix::zeros(LDIM, LDIM);
        add_sandwich(&mut l, &a, &b, C64::new(2.0, 0.5));
        let got = unvectorize(&(&l * vectorize(&rho)));
        let want = a * rho * b * C64::new(2.0, 0.5);
        assert!((got - want).camax() < 1e-12);
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let ss = steady_state(&system(0.2, 1.0, 0.4, 0.0)).unwrap();
        assert!((ss.rho.rho - DensityMatrix::ground().rho).camax() < 1e-10);
        assert!(!ss.degenerate);
    }

    #[test]
    fn population_decays_at_twice_gamma() {
        // Far enough apart that collective decay and exchange are negligible.
        let l = system(20.0, 1.2, 0.0, 0.0);
        let idx = basis_index(2, 4);
        let rho = evolve(&DensityMatrix::pure(idx), &l, 1.0, None).unwrap();
        let p = rho.rho[(idx, idx)].re;
        assert!((p / (-2.0f64).exp() - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn ground_state_is_stationary() {
        let l = system(0.1, 0.4, 2.0, 0.0);
        let rho = evolve(&DensityMatrix::ground(), &l, 5.0, None).unwrap();
        assert!((rho.rho - DensityMatrix::ground().rho).camax() < 1e-14);
    }

    #[test]
    fn steady_state_matches_long_time_evolution() {
        let l = system(0.3, FRAC_PI_2, 0.0, 100.0);
        let ss = steady_state(&l).unwrap();
        assert!(ss.residual < 1e-10);
        let rho = evolve(&DensityMatrix::ground(), &l, 50.0, None).unwrap();
        assert!((rho.rho - ss.rho.rho).camax() < 1e-6);
    }

    #[test]
    fn oversized_step_is_reported() {
        let l = system(0.3, FRAC_PI_2, 0.0, 100.0);
        let err = evolve(&DensityMatrix::ground(), &l, 10.0, Some(0.5)).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }
}
