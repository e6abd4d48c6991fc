//! Cyclic Jacobi eigensolver for dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `h_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the whole sweep stays
//! in complex arithmetic without doubling the problem to a real 2n system.
//! Cost is O(n^3) per sweep; intended for n up to a few hundred.

use num_complex::Complex64 as C64;

use super::matrix::{ComplexMatrix, HERMITIAN_TOL, ZERO};
use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm (relative to the full norm) at which sweeps stop.
pub const SWEEP_THRESHOLD: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.rows())
            .map(|i| self.vectors[(i, k)])
            .collect()
    }

    /// max |H V - V diag(λ)|
    pub fn residual(&self, h: &ComplexMatrix) -> f64 {
        let hv = h.matmul(&self.vectors);
        let n = h.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let r = hv[(i, k)] - self.vectors[(i, k)] * self.values[k];
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<Eigh> {
    jacobi(h, true)
}

/// Eigenvalues only (ascending); skips accumulating the eigenvectors.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    jacobi(h, false).map(|e| e.values)
}

fn off_norm_sqr(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn jacobi(h: &ComplexMatrix, want_vectors: bool) -> Result<Eigh> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermiticity_defect();
    let scale = h.max_abs().max(1.0);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitianInput(defect));
    }

    let n = h.rows();
    let mut a = h.clone();
    a.hermitize();
    let mut v = if want_vectors {
        ComplexMatrix::identity(n)
    } else {
        ComplexMatrix::identity(0)
    };

    let total = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let stop = (SWEEP_THRESHOLD * total).powi(2);

    for _sweep in 0..MAX_SWEEPS {
        if off_norm_sqr(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip pivots that are negligible next to both diagonals.
                if mag < 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let phase = apq / mag; // e^{iα}
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s, phase);
                if want_vectors {
                    rotate_columns(&mut v, p, q, c, s, phase);
                }
            }
        }
    }
    if off_norm_sqr(&a) > stop * 1e4 {
        return Err(Error::NoConvergence(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-norm {:e})",
            off_norm_sqr(&a).sqrt()
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = if want_vectors {
        ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])])
    } else {
        ComplexMatrix::zeros(0, 0)
    };
    Ok(Eigh { values, vectors })
}

/// Column update with G = diag(1, e^{-iα}) · [[c, s], [-s, c]] on (p, q).
fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let back = phase.conj();
    for i in 0..m.rows() {
        let xp = m[(i, p)];
        let xq = m[(i, q)] * back;
        m[(i, p)] = xp * c - xq * s;
        m[(i, q)] = xp * s + xq * c;
    }
}

/// A <- G^dagger A G for the same G as `rotate_columns`.
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    rotate_columns(a, p, q, c, s, phase);
    let n = a.cols();
    for j in 0..n {
        let xp = a[(p, j)];
        let xq = a[(q, j)] * phase;
        a[(p, j)] = xp * c - xq * s;
        a[(q, j)] = xp * s + xq * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}

/// Number of eigenvalues with |λ| > tol.
pub fn rank(h: &ComplexMatrix, tol: f64) -> Result<usize> {
    Ok(eigvalsh(h)?.iter().filter(|l| l.abs() > tol).count())
}
