//! State-dependent bounds on ⟨W_S⟩ for three parties.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::collective::build_w_s;
use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, local_product_trace, ComplexMatrix};
use crate::states::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaBounds {
    /// tr(ρ W_S).
    pub value: f64,
    /// max over party roles X of ‖s_X‖ ‖v_YZ‖.
    pub fs_bound: f64,
    /// max over cuts XY|Z of Σ_i σ_i(S_XY) σ_i(Z*).
    pub bisep_bound: f64,
}

/// Singular values of a real square matrix, descending.
pub fn singular_values(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    let mtm = ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new((0..n).map(|k| m[k][i] * m[k][j]).sum(), 0.0)
    });
    let mut s: Vec<f64> = eigvalsh(&mtm)?
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    s.reverse();
    Ok(s)
}

fn weight(w: &[Vec<Vec<f64>>], idx: [usize; 3]) -> f64 {
    w[idx[0]][idx[1]][idx[2]]
}

/// Places `a` at position `pos` and the remaining two indices (in order) around it.
fn place(pos: usize, a: usize, rest: [usize; 2]) -> [usize; 3] {
    match pos {
        0 => [a, rest[0], rest[1]],
        1 => [rest[0], a, rest[1]],
        _ => [rest[0], rest[1], a],
    }
}

pub fn lemma_bounds(
    rho: &DensityMatrix,
    w: &[Vec<Vec<f64>>],
    s: &[ComplexMatrix],
) -> Result<LemmaBounds> {
    if rho.n_parties() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "lemma bounds need three parties, got {}",
            rho.n_parties()
        )));
    }
    let op = build_w_s(w, s)?;
    if op.structure() != rho.structure() {
        return Err(Error::ShapeMismatch(
            "local operators do not match the local dimension of the state".into(),
        ));
    }
    let value = rho.matrix().trace_product(op.matrix()).re;

    let l = s.len();
    let st = rho.structure();
    let m = rho.matrix();
    let local: Vec<Vec<f64>> = (0..3)
        .map(|x| {
            s.iter()
                .map(|si| local_product_trace(m, st, &[(x, si)]).re)
                .collect()
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut fs_bound: f64 = f64::NEG_INFINITY;
    let mut bisep_bound: f64 = f64::NEG_INFINITY;
    for pos in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&p| p != pos).collect();
        let (y, z) = (others[0], others[1]);

        let v: Vec<f64> = (0..l)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..l {
                    for k in 0..l {
                        acc += local[y][j] * local[z][k] * weight(w, place(pos, i, [j, k]));
                    }
                }
                acc
            })
            .collect();
        fs_bound = fs_bound.max(norm(&local[pos]) * norm(&v));

        // cut (y, z) | pos
        let corr: Vec<Vec<f64>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| local_product_trace(m, st, &[(y, &s[i]), (z, &s[j])]).re)
                    .collect()
            })
            .collect();
        let zstar: Vec<Vec<f64>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        (0..l)
                            .map(|k| local[pos][k] * weight(w, place(pos, k, [i, j])))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let bound: f64 = singular_values(&corr)?
            .iter()
            .zip(singular_values(&zstar)?)
            .map(|(a, b)| a * b)
            .sum();
        bisep_bound = bisep_bound.max(bound);
    }
    Ok(LemmaBounds {
        value,
        fs_bound,
        bisep_bound,
    })
}
