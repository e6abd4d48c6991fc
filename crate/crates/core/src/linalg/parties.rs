//! Operations that need to know the tensor-factor layout of a matrix.
//!
//! Party 0 is the most significant digit of the computational index, so for
//! qubits the basis state |q_0 q_1 ... q_{N-1}> sits at index Σ q_i 2^{N-1-i}.

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartyStructure {
    pub n_parties: usize,
    pub local_dim: usize,
}

impl PartyStructure {
    pub fn new(n_parties: usize, local_dim: usize) -> Self {
        Self {
            n_parties,
            local_dim,
        }
    }

    pub fn qubits(n: usize) -> Self {
        Self::new(n, 2)
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.n_parties as u32)
    }

    /// Base-d digits of a computational index, party 0 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_parties];
        for slot in out.iter_mut().rev() {
            *slot = index % self.local_dim;
            index /= self.local_dim;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.local_dim + d)
    }

    /// Stride of party `k` in the computational index.
    pub fn stride(&self, k: usize) -> usize {
        self.local_dim.pow((self.n_parties - 1 - k) as u32)
    }

    pub fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if m.rows() != self.dim() || m.cols() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix does not match {} parties of dimension {}",
                m.rows(),
                m.cols(),
                self.n_parties,
                self.local_dim
            )));
        }
        Ok(())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.n_parties];
        for &k in subset {
            if k >= self.n_parties {
                return Err(Error::BadPartition(format!(
                    "party {k} out of range for {} parties",
                    self.n_parties
                )));
            }
            if mask[k] {
                return Err(Error::BadPartition(format!("party {k} listed twice")));
            }
            mask[k] = true;
        }
        Ok(mask)
    }
}

/// Reduced operator on the parties in `keep` (kept in ascending order).
pub fn partial_trace(
    m: &ComplexMatrix,
    structure: PartyStructure,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    structure.check_matrix(m)?;
    if keep.is_empty() {
        return Err(Error::BadPartition("keep set is empty".into()));
    }
    let mask = structure.check_subset(keep)?;
    let kept: Vec<usize> = (0..structure.n_parties).filter(|&k| mask[k]).collect();
    let traced: Vec<usize> = (0..structure.n_parties).filter(|&k| !mask[k]).collect();
    let d = structure.local_dim;
    let kept_dim = d.pow(kept.len() as u32);
    let traced_dim = d.pow(traced.len() as u32);

    // Full index = kept part + traced part, each built from digit strides.
    let offsets = |parties: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|local| {
                let mut rem = local;
                let mut full = 0;
                for &k in parties.iter().rev() {
                    full += (rem % d) * structure.stride(k);
                    rem /= d;
                }
                full
            })
            .collect()
    };
    let kept_off = offsets(&kept, kept_dim);
    let traced_off = offsets(&traced, traced_dim);

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for (i, &ki) in kept_off.iter().enumerate() {
        for (j, &kj) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ki + t, kj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Transposes the tensor factors listed in `subset`.
pub fn partial_transpose(
    m: &ComplexMatrix,
    structure: PartyStructure,
    subset: &[usize],
) -> Result<ComplexMatrix> {
    structure.check_matrix(m)?;
    if subset.is_empty() || subset.len() >= structure.n_parties {
        return Err(Error::BadPartition(format!(
            "partial transpose needs a proper nonempty subset, got {} of {} parties",
            subset.len(),
            structure.n_parties
        )));
    }
    let mask = structure.check_subset(subset)?;
    let n = structure.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let di = structure.digits(i);
        for j in 0..n {
            let dj = structure.digits(j);
            let mut ri = di.clone();
            let mut rj = dj.clone();
            for k in 0..structure.n_parties {
                if mask[k] {
                    ri[k] = dj[k];
                    rj[k] = di[k];
                }
            }
            out[(structure.index(&ri), structure.index(&rj))] = m[(i, j)];
        }
    }
    Ok(out)
}

/// SWAP between parties `a` and `b`: |..ψ_a..ψ_b..> -> |..ψ_b..ψ_a..>.
pub fn swap_operator(structure: PartyStructure, a: usize, b: usize) -> Result<ComplexMatrix> {
    if a == b || a >= structure.n_parties || b >= structure.n_parties {
        return Err(Error::BadPartition(format!(
            "swap needs two distinct parties below {}, got ({a}, {b})",
            structure.n_parties
        )));
    }
    let n = structure.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let mut d = structure.digits(i);
        d.swap(a, b);
        out[(structure.index(&d), i)] = ONE;
    }
    Ok(out)
}

/// Projector (1 + SWAP_ab)/2 onto states symmetric in parties a and b.
pub fn symmetric_projector_pair(
    structure: PartyStructure,
    a: usize,
    b: usize,
) -> Result<ComplexMatrix> {
    let swap = swap_operator(structure, a, b)?;
    Ok((&ComplexMatrix::identity(structure.dim()) + &swap).scale_real(0.5))
}

/// `op` acting on party `k`, identity elsewhere.
pub fn embed(op: &ComplexMatrix, structure: PartyStructure, k: usize) -> ComplexMatrix {
    embed_many(&[(k, op)], structure)
}

/// Tensor product with the given operators on the given parties, identity elsewhere.
pub fn embed_many(ops: &[(usize, &ComplexMatrix)], structure: PartyStructure) -> ComplexMatrix {
    let id = ComplexMatrix::identity(structure.local_dim);
    let factors: Vec<&ComplexMatrix> = (0..structure.n_parties)
        .map(|k| {
            ops.iter()
                .find(|(p, _)| *p == k)
                .map(|(_, m)| *m)
                .unwrap_or(&id)
        })
        .collect();
    super::matrix::kron_all(factors)
}

/// Base indices whose digit for party `k` is zero.
fn party_bases(structure: PartyStructure, k: usize) -> impl Iterator<Item = usize> {
    let s = structure.stride(k);
    let d = structure.local_dim;
    (0..structure.dim()).filter(move |i| (i / s).is_multiple_of(d))
}

/// U^{⊗N} |v>, applying the single-party unitary one factor at a time.
pub fn local_apply_vec(
    v: &[num_complex::Complex64],
    structure: PartyStructure,
    u: &ComplexMatrix,
) -> Vec<num_complex::Complex64> {
    let d = structure.local_dim;
    assert_eq!(v.len(), structure.dim());
    assert_eq!((u.rows(), u.cols()), (d, d));
    let mut out = v.to_vec();
    let mut buf = vec![ZERO; d];
    for k in 0..structure.n_parties {
        let s = structure.stride(k);
        for b in party_bases(structure, k) {
            for (t, slot) in buf.iter_mut().enumerate() {
                *slot = out[b + t * s];
            }
            for t in 0..d {
                out[b + t * s] = (0..d).map(|t2| u[(t, t2)] * buf[t2]).sum();
            }
        }
    }
    out
}

/// U^{⊗N} M (U^dagger)^{⊗N}.
pub fn local_conjugate(
    m: &ComplexMatrix,
    structure: PartyStructure,
    u: &ComplexMatrix,
) -> ComplexMatrix {
    let d = structure.local_dim;
    let n = structure.dim();
    assert_eq!((m.rows(), m.cols()), (n, n));
    assert_eq!((u.rows(), u.cols()), (d, d));
    let mut out = m.clone();
    let mut buf = vec![ZERO; d];
    for k in 0..structure.n_parties {
        let s = structure.stride(k);
        let bases: Vec<usize> = party_bases(structure, k).collect();
        // rows: U_k M
        for c in 0..n {
            for &b in &bases {
                for (t, slot) in buf.iter_mut().enumerate() {
                    *slot = out[(b + t * s, c)];
                }
                for t in 0..d {
                    out[(b + t * s, c)] = (0..d).map(|t2| u[(t, t2)] * buf[t2]).sum();
                }
            }
        }
        // columns: M U_k^dagger
        for r in 0..n {
            for &b in &bases {
                for (t, slot) in buf.iter_mut().enumerate() {
                    *slot = out[(r, b + t * s)];
                }
                for t in 0..d {
                    out[(r, b + t * s)] = (0..d).map(|t2| buf[t2] * u[(t, t2)].conj()).sum();
                }
            }
        }
    }
    out
}

/// Calls `f(row, entry)` for every nonzero entry in column `col` of the local product.
fn for_each_local_term(
    structure: PartyStructure,
    ops: &[(usize, &ComplexMatrix)],
    col: usize,
    mut f: impl FnMut(usize, num_complex::Complex64),
) {
    let d = structure.local_dim;
    let mut base = col;
    let mut inputs = Vec::with_capacity(ops.len());
    for &(k, _) in ops {
        let s = structure.stride(k);
        let digit = (col / s) % d;
        base -= digit * s;
        inputs.push((s, digit));
    }
    let terms = d.pow(ops.len() as u32);
    'outer: for t in 0..terms {
        let mut rem = t;
        let mut row = base;
        let mut amp = ONE;
        for (&(_, op), &(s, din)) in ops.iter().zip(&inputs) {
            let e = rem % d;
            rem /= d;
            let v = op[(e, din)];
            if v == ZERO {
                continue 'outer;
            }
            amp *= v;
            row += e * s;
        }
        f(row, amp);
    }
}

/// target += coeff · (⊗ ops on the listed parties, identity elsewhere). Parties must be distinct.
pub fn add_local_product(
    target: &mut ComplexMatrix,
    structure: PartyStructure,
    ops: &[(usize, &ComplexMatrix)],
    coeff: num_complex::Complex64,
) {
    for c in 0..structure.dim() {
        for_each_local_term(structure, ops, c, |r, amp| target[(r, c)] += coeff * amp);
    }
}

/// tr(M · (⊗ ops on the listed parties)) without forming the product. Parties must be distinct.
pub fn local_product_trace(
    m: &ComplexMatrix,
    structure: PartyStructure,
    ops: &[(usize, &ComplexMatrix)],
) -> num_complex::Complex64 {
    let mut acc = ZERO;
    for c in 0..structure.dim() {
        // tr(M P) = Σ_{r,c} M[c, r] P[r, c]
        for_each_local_term(structure, ops, c, |r, amp| acc += m[(c, r)] * amp);
    }
    acc
}
