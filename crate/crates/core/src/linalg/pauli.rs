//! Single-qubit Pauli matrices.

use num_complex::Complex64 as C64;

use super::matrix::{ComplexMatrix, I, ONE, ZERO};

pub fn x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// (σ_x, σ_y, σ_z)
pub fn xyz() -> [ComplexMatrix; 3] {
    [x(), y(), z()]
}

/// u·σ for a real 3-vector u.
pub fn along(u: [f64; 3]) -> ComplexMatrix {
    let [a, b, c] = u;
    ComplexMatrix::from_rows(&[
        &[C64::new(c, 0.0), C64::new(a, -b)],
        &[C64::new(a, b), C64::new(-c, 0.0)],
    ])
}

/// Levi-Civita symbol on {0,1,2}.
pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}
