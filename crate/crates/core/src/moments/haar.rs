//! Haar-random unitaries and uniform directions.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{pauli, ComplexMatrix};

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random d×d unitary: Gram-Schmidt on a complex Ginibre matrix.
///
/// Classical Gram-Schmidt yields the QR factor with a positive real diagonal
/// in R, which is exactly the phase fix that makes Q Haar distributed.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| (0..d).map(|_| gaussian(rng)).collect())
        .collect();
    for j in 0..d {
        for k in 0..j {
            let proj: C64 = (0..d).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..d {
                let q = cols[k][i];
                cols[j][i] -= proj * q;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[j] {
            *z /= norm;
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Haar-random element of U(2).
pub fn sample_haar_su2(rng: &mut impl Rng) -> ComplexMatrix {
    haar_unitary(2, rng)
}

/// Uniform point on S² (normalized Gaussian 3-vector).
pub fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    crate::states::random::unit_vector(rng)
}

/// The axis u with U σ_z U† = u·σ.
pub fn rotated_axis(u: &ComplexMatrix) -> [f64; 3] {
    let rz = u.matmul(&pauli::z()).matmul(&u.adjoint());
    let s = pauli::xyz();
    [0, 1, 2].map(|a| 0.5 * s[a].trace_product(&rz).re)
}

/// A unitary with U σ_z U† = u·σ for a unit vector u.
pub fn unitary_for_axis(u: [f64; 3]) -> ComplexMatrix {
    // columns: spin-up and spin-down along u
    let up = crate::states::qubit_from_bloch(u);
    let down = crate::states::qubit_from_bloch([-u[0], -u[1], -u[2]]);
    let m = ComplexMatrix::from_fn(2, 2, |i, j| if j == 0 { up[i] } else { down[i] });
    debug_assert!(
        m.adjoint()
            .matmul(&m)
            .max_abs_diff(&ComplexMatrix::identity(2))
            < 1e-12
    );
    m
}

/// max |U†U − 1|
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    u.adjoint()
        .matmul(u)
        .max_abs_diff(&ComplexMatrix::identity(u.rows()))
}
