//! Repeated shifted solves `(A − zI) x = b` through one Hessenberg reduction.
//!
//! `A = Q H Q†` is computed once; each shift then costs an `O(n²)` elimination
//! on the upper-Hessenberg `H` instead of an `O(n³)` factorization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Pivot magnitude, relative to `‖H‖`, below which a shift is treated as
/// hitting an undamped mode.
const TINY_PIVOT: f64 = 1e-13;

/// Shift added (as `−ε`) when the shifted system is numerically singular.
pub const REGULARIZATION: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    n: usize,
    q: DMatrix<C64>,
    /// `H` in row-major order, for cache-friendly row eliminations.
    h: Vec<C64>,
    scale: f64,
}

/// Outcome of one shifted solve.
#[derive(Debug, Clone)]
pub struct ShiftedSolution {
    /// One solution per right-hand side, in the reduced (`Q†`) coordinates.
    pub reduced: Vec<Vec<C64>>,
    /// The unmodified system was singular and `−εI` was added.
    pub regularized: bool,
}

/// Per-thread scratch space.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    a: Vec<C64>,
}

impl ShiftedSolver {
    pub fn new(a: DMatrix<C64>) -> Self {
        assert!(a.is_square());
        let n = a.nrows();
        let (q, h) = a.hessenberg().unpack();
        let mut rows = vec![ZERO; n * n];
        for r in 0..n {
            for c in r.saturating_sub(1)..n {
                rows[r * n + c] = h[(r, c)];
            }
        }
        let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        ShiftedSolver { n, q, h: rows, scale }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Q† b`.
    pub fn reduce_rhs(&self, b: &DVector<C64>) -> Vec<C64> {
        self.q.ad_mul(b).as_slice().to_vec()
    }

    /// `Qᵀ u`, so that `u · x = (Qᵀ u) · y` for `x = Q y` (bilinear, no conjugation).
    pub fn reduce_functional(&self, u: &DVector<C64>) -> Vec<C64> {
        self.q.tr_mul(u).as_slice().to_vec()
    }

    /// `x = Q y`.
    pub fn expand(&self, y: &[C64]) -> DVector<C64> {
        &self.q * DVector::from_column_slice(y)
    }

    /// Solves `(H − zI) y = r` for every reduced right-hand side.
    pub fn solve(&self, z: C64, rhs: &[Vec<C64>], ws: &mut Workspace) -> ShiftedSolution {
        match self.eliminate(z, rhs, ws) {
            Some(reduced) => ShiftedSolution {
                reduced,
                regularized: false,
            },
            None => {
                let z = z + C64::new(REGULARIZATION, 0.0);
                let reduced = self.eliminate(z, rhs, ws).unwrap_or_else(|| {
                    rhs.iter().map(|r| vec![C64::new(f64::NAN, f64::NAN); r.len()]).collect()
                });
                ShiftedSolution {
                    reduced,
                    regularized: true,
                }
            }
        }
    }

    /// Gaussian elimination with partial pivoting between adjacent rows,
    /// followed by back substitution. `None` on a vanishing pivot.
    fn eliminate(&self, z: C64, rhs: &[Vec<C64>], ws: &mut Workspace) -> Option<Vec<Vec<C64>>> {
        let n = self.n;
        ws.a.clear();
        ws.a.extend_from_slice(&self.h);
        let a = &mut ws.a;
        for k in 0..n {
            a[k * n + k] -= z;
        }
        let mut b: Vec<Vec<C64>> = rhs.to_vec();
        let tiny = TINY_PIVOT * self.scale;

        for k in 0..n.saturating_sub(1) {
            let (p, s) = (k * n, (k + 1) * n);
            if a[s + k].norm_sqr() > a[p + k].norm_sqr() {
                for c in k..n {
                    a.swap(p + c, s + c);
                }
                for v in b.iter_mut() {
                    v.swap(k, k + 1);
                }
            }
            let piv = a[p + k];
            if piv.norm() <= tiny {
                return None;
            }
            let f = a[s + k] / piv;
            if f != ZERO {
                a[s + k] = ZERO;
                let (top, bottom) = a.split_at_mut(s);
                let prow = &top[p + k + 1..p + n];
                let srow = &mut bottom[k + 1..n];
                for (x, y) in srow.iter_mut().zip(prow) {
                    *x -= f * y;
                }
                for v in b.iter_mut() {
                    let t = v[k];
                    v[k + 1] -= f * t;
                }
            }
        }
        if a[(n - 1) * n + n - 1].norm() <= tiny {
            return None;
        }
        for v in b.iter_mut() {
            for r in (0..n).rev() {
                let row = &a[r * n..(r + 1) * n];
                let mut acc = v[r];
                for c in r + 1..n {
                    acc -= row[c] * v[c];
                }
                v[r] = acc / row[r];
            }
        }
        Some(b)
    }
}
