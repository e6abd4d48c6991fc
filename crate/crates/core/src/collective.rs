//! Collective spin operators, the qudit Gell-Mann family and the
//! permutation-(anti)symmetric three-body observables.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    add_local_product, kron_all, pauli, ComplexMatrix, PartyStructure, MAX_EXPECTATION_DIM, ONE,
};

pub const DIRECTION_TOL: f64 = 1e-10;
pub const MAX_TRIPLE_N: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorLabel {
    Jx,
    Jy,
    Jz,
    Ju,
    /// Λ_l, 1-based.
    Lambda(usize),
    OS,
    OA,
    WS,
    Jplus,
    Jminus,
}

impl fmt::Display for OperatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorLabel::Lambda(l) => write!(f, "Lambda_{l}"),
            OperatorLabel::OS => write!(f, "O_S"),
            OperatorLabel::OA => write!(f, "O_A"),
            OperatorLabel::WS => write!(f, "W_S"),
            other => write!(f, "{other:?}"),
        }
    }
}

/// Dense Hermitian operator with party structure and a tag.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveOperator {
    matrix: ComplexMatrix,
    structure: PartyStructure,
    label: OperatorLabel,
}

impl CollectiveOperator {
    fn new(mut matrix: ComplexMatrix, structure: PartyStructure, label: OperatorLabel) -> Self {
        debug_assert!(matrix.is_hermitian(1e-12), "{label} not Hermitian");
        matrix.hermitize();
        Self {
            matrix,
            structure,
            label,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn structure(&self) -> PartyStructure {
        self.structure
    }

    pub fn label(&self) -> OperatorLabel {
        self.label
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

type CacheKey = (OperatorLabel, usize, usize);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<CollectiveOperator>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<CollectiveOperator>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Looks up `(label, N, d)` or builds and inserts it. Concurrent builders of
/// the same key may both compute; the first insertion wins.
fn cached(
    key: CacheKey,
    build: impl FnOnce() -> Result<CollectiveOperator>,
) -> Result<Arc<CollectiveOperator>> {
    if let Some(op) = cache().read().expect("operator cache poisoned").get(&key) {
        return Ok(Arc::clone(op));
    }
    let op = Arc::new(build()?);
    let mut w = cache().write().expect("operator cache poisoned");
    Ok(Arc::clone(w.entry(key).or_insert(op)))
}

fn check_dim(structure: PartyStructure) -> Result<()> {
    if structure.n_parties == 0 {
        return Err(Error::OutOfRange("need at least one party".into()));
    }
    if structure
        .local_dim
        .checked_pow(structure.n_parties as u32)
        .is_none_or(|d| d > MAX_EXPECTATION_DIM)
    {
        return Err(Error::OutOfRange(format!(
            "{} parties of dimension {} exceed the cap {MAX_EXPECTATION_DIM}",
            structure.n_parties, structure.local_dim
        )));
    }
    Ok(())
}

pub fn check_direction(u: [f64; 3]) -> Result<()> {
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > DIRECTION_TOL {
        return Err(Error::BadDirection(norm));
    }
    Ok(())
}

/// scale · Σ_k op^{(k)}.
fn local_sum(structure: PartyStructure, op: &ComplexMatrix, scale: f64) -> ComplexMatrix {
    let dim = structure.dim();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for k in 0..structure.n_parties {
        add_local_product(&mut m, structure, &[(k, op)], C64::new(scale, 0.0));
    }
    m
}

/// J_u = (1/2) Σ_i u·σ^{(i)}.
pub fn collective_j(n: usize, u: [f64; 3]) -> Result<CollectiveOperator> {
    check_direction(u)?;
    let s = PartyStructure::qubits(n);
    check_dim(s)?;
    let label = match u {
        [1.0, 0.0, 0.0] => OperatorLabel::Jx,
        [0.0, 1.0, 0.0] => OperatorLabel::Jy,
        [0.0, 0.0, 1.0] => OperatorLabel::Jz,
        _ => OperatorLabel::Ju,
    };
    Ok(CollectiveOperator::new(
        local_sum(s, &pauli::along(u), 0.5),
        s,
        label,
    ))
}

/// Cached J_x, J_y, J_z for N qubits.
pub fn collective_axes(n: usize) -> Result<[Arc<CollectiveOperator>; 3]> {
    let labels = [OperatorLabel::Jx, OperatorLabel::Jy, OperatorLabel::Jz];
    let mut out = Vec::with_capacity(3);
    for (a, label) in labels.into_iter().enumerate() {
        let mut u = [0.0; 3];
        u[a] = 1.0;
        out.push(cached((label, n, 2), || collective_j(n, u))?);
    }
    Ok(out.try_into().expect("three axes"))
}

/// Generalized Gell-Mann matrices scaled so that tr(λ_k λ_l) = d δ_kl.
///
/// Order: for k = 1..d-1, the symmetric and antisymmetric pairs (j, k) for
/// j < k, then the k-th diagonal matrix. For d = 2 this is (σ_x, σ_y, σ_z).
pub fn gell_mann(d: usize) -> Result<Vec<ComplexMatrix>> {
    if d < 2 {
        return Err(Error::OutOfRange(format!(
            "Gell-Mann needs d >= 2, got {d}"
        )));
    }
    let scale = (d as f64 / 2.0).sqrt();
    let mut out = Vec::with_capacity(d * d - 1);
    for k in 1..d {
        for j in 0..k {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = ONE;
            sym[(k, j)] = ONE;
            out.push(sym.scale_real(scale));
            let mut asym = ComplexMatrix::zeros(d, d);
            asym[(j, k)] = C64::new(0.0, -1.0);
            asym[(k, j)] = C64::new(0.0, 1.0);
            out.push(asym.scale_real(scale));
        }
        let norm = (2.0 / (k * (k + 1)) as f64).sqrt() * scale;
        let diag: Vec<f64> = (0..d)
            .map(|i| match i.cmp(&k) {
                std::cmp::Ordering::Less => norm,
                std::cmp::Ordering::Equal => -(k as f64) * norm,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        out.push(ComplexMatrix::from_real_diag(&diag));
    }
    Ok(out)
}

/// Λ_l = (1/d) Σ_i λ_l^{(i)} with 1-based l.
pub fn collective_lambda(n: usize, d: usize, l: usize) -> Result<CollectiveOperator> {
    let lambdas = gell_mann(d)?;
    if l == 0 || l > lambdas.len() {
        return Err(Error::OutOfRange(format!(
            "Gell-Mann index {l} outside 1..={}",
            lambdas.len()
        )));
    }
    let s = PartyStructure::new(n, d);
    check_dim(s)?;
    Ok(CollectiveOperator::new(
        local_sum(s, &lambdas[l - 1], 1.0 / d as f64),
        s,
        OperatorLabel::Lambda(l),
    ))
}

/// Cached Λ_1..Λ_{d²-1}.
pub fn collective_lambdas(n: usize, d: usize) -> Result<Vec<Arc<CollectiveOperator>>> {
    (1..d * d)
        .map(|l| {
            cached((OperatorLabel::Lambda(l), n, d), || {
                collective_lambda(n, d, l)
            })
        })
        .collect()
}

fn check_triple_n(n: usize) -> Result<()> {
    if !(3..=MAX_TRIPLE_N).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "three-body observables need 3 <= N <= {MAX_TRIPLE_N}, got {n}"
        )));
    }
    Ok(())
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [0, 2, 1],
    [2, 1, 0],
    [1, 0, 2],
];

/// Σ_{i<j<k} Σ_{lmn} w(l,m,n) σ_l^{(i)} σ_m^{(j)} σ_n^{(k)} over permutations (l,m,n) of (x,y,z).
fn triple_sum(n: usize, weight: impl Fn([usize; 3]) -> f64) -> ComplexMatrix {
    let s = PartyStructure::qubits(n);
    let sigma = pauli::xyz();
    let mut m = ComplexMatrix::zeros(s.dim(), s.dim());
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for p in PERMUTATIONS {
                    let w = weight(p);
                    let ops = [(i, &sigma[p[0]]), (j, &sigma[p[1]]), (k, &sigma[p[2]])];
                    add_local_product(&mut m, s, &ops, C64::new(w, 0.0));
                }
            }
        }
    }
    m
}

/// O_S = Σ_{i<j<k} 𝒮(σ_x ⊗ σ_y ⊗ σ_z), 𝒮 summing the six axis assignments.
pub fn build_o_s(n: usize) -> Result<CollectiveOperator> {
    check_triple_n(n)?;
    Ok(CollectiveOperator::new(
        triple_sum(n, |_| 1.0),
        PartyStructure::qubits(n),
        OperatorLabel::OS,
    ))
}

/// O_A = Σ_{i<j<k} Σ_{lmn} ε_lmn σ_l^{(i)} σ_m^{(j)} σ_n^{(k)}.
pub fn build_o_a(n: usize) -> Result<CollectiveOperator> {
    check_triple_n(n)?;
    Ok(CollectiveOperator::new(
        triple_sum(n, |p| pauli::levi_civita(p[0], p[1], p[2])),
        PartyStructure::qubits(n),
        OperatorLabel::OA,
    ))
}

pub fn cached_o_a(n: usize) -> Result<Arc<CollectiveOperator>> {
    cached((OperatorLabel::OA, n, 2), || build_o_a(n))
}

pub fn cached_o_s(n: usize) -> Result<Arc<CollectiveOperator>> {
    cached((OperatorLabel::OS, n, 2), || build_o_s(n))
}

/// (8/3!) 𝒮(J_x J_y J_z), summing the six operator orderings.
pub fn o_s_from_collective(n: usize) -> Result<ComplexMatrix> {
    let j = collective_axes(n)?;
    let dim = 1usize << n;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for p in PERMUTATIONS {
        let prod = j[p[0]]
            .matrix()
            .matmul(j[p[1]].matrix())
            .matmul(j[p[2]].matrix());
        acc += &prod;
    }
    Ok(acc.scale_real(8.0 / 6.0))
}

/// W_S = Σ_{ijk} w_ijk s_i ⊗ s_j ⊗ s_k on three parties.
pub fn build_w_s(w: &[Vec<Vec<f64>>], s: &[ComplexMatrix]) -> Result<CollectiveOperator> {
    let m = s.len();
    let d = s
        .first()
        .ok_or_else(|| Error::ShapeMismatch("W_S needs at least one local operator".into()))?
        .rows();
    for op in s {
        if !op.is_square() || op.rows() != d {
            return Err(Error::ShapeMismatch(
                "W_S local operators must be square with equal dimensions".into(),
            ));
        }
        if op.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12 {
            return Err(Error::ShapeMismatch(
                "W_S local operators must not be the identity".into(),
            ));
        }
    }
    if w.len() != m
        || w.iter()
            .any(|row| row.len() != m || row.iter().any(|c| c.len() != m))
    {
        return Err(Error::ShapeMismatch(format!(
            "W_S weight tensor must be {m}x{m}x{m}"
        )));
    }
    let structure = PartyStructure::new(3, d);
    let mut out = ComplexMatrix::zeros(structure.dim(), structure.dim());
    for (i, wi) in w.iter().enumerate() {
        for (j, wij) in wi.iter().enumerate() {
            for (k, &wijk) in wij.iter().enumerate() {
                if wijk != 0.0 {
                    let ops = [(0, &s[i]), (1, &s[j]), (2, &s[k])];
                    add_local_product(&mut out, structure, &ops, C64::new(wijk, 0.0));
                }
            }
        }
    }
    if !out.is_hermitian(1e-10) {
        return Err(Error::NonHermitianInput(out.hermiticity_defect()));
    }
    Ok(CollectiveOperator::new(out, structure, OperatorLabel::WS))
}

/// ε_ijk as a nested tensor.
pub fn levi_civita_tensor() -> Vec<Vec<Vec<f64>>> {
    (0..3)
        .map(|i| {
            (0..3)
                .map(|j| (0..3).map(|k| pauli::levi_civita(i, j, k)).collect())
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// J_l^± = J_{l,A} ⊗ 1 ± 1 ⊗ J_{l,B} on 2N qubits; `axis` 0, 1, 2 for x, y, z.
pub fn two_ensemble_j(n: usize, axis: usize, sign: Sign) -> Result<CollectiveOperator> {
    two_ensemble_j_mixed(n, axis, axis, sign)
}

/// J_{p,A} ± J_{q,B} with independent axes for the two ensembles.
pub fn two_ensemble_j_mixed(
    n: usize,
    p: usize,
    q: usize,
    sign: Sign,
) -> Result<CollectiveOperator> {
    if p > 2 || q > 2 {
        return Err(Error::OutOfRange(format!(
            "axis index ({p}, {q}) outside 0..=2"
        )));
    }
    if n == 0 || 2 * n > crate::states::MAX_QUBITS {
        return Err(Error::OutOfRange(format!(
            "two-ensemble operators need 1 <= 2N <= {}, got N = {n}",
            crate::states::MAX_QUBITS
        )));
    }
    let s = PartyStructure::qubits(2 * n);
    let sigma = pauli::xyz();
    let sgn = match sign {
        Sign::Plus => 0.5,
        Sign::Minus => -0.5,
    };
    let mut m = ComplexMatrix::zeros(s.dim(), s.dim());
    for k in 0..n {
        add_local_product(&mut m, s, &[(k, &sigma[p])], C64::new(0.5, 0.0));
        add_local_product(&mut m, s, &[(n + k, &sigma[q])], C64::new(sgn, 0.0));
    }
    let label = match sign {
        Sign::Plus => OperatorLabel::Jplus,
        Sign::Minus => OperatorLabel::Jminus,
    };
    Ok(CollectiveOperator::new(m, s, label))
}

/// Kronecker product of single-qubit Paulis given by axis labels (3 = identity).
pub fn pauli_string(axes: &[usize]) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    let sigma = pauli::xyz();
    let factors: Vec<&ComplexMatrix> = axes
        .iter()
        .map(|&a| if a < 3 { &sigma[a] } else { &id })
        .collect();
    if factors.is_empty() {
        return ComplexMatrix::from_rows(&[&[ONE]]);
    }
    kron_all(factors)
}

/// ⟨J_a⟩ and Re⟨J_a J_b⟩ of an N-qubit state, from one- and two-body Pauli correlators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMoments {
    pub n: usize,
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl SpinMoments {
    pub fn of(rho: &crate::states::DensityMatrix) -> Result<Self> {
        if rho.local_dim() != 2 {
            return Err(Error::OutOfRange("spin moments need qubits".into()));
        }
        let n = rho.n_parties();
        let s = rho.structure();
        let m = rho.matrix();
        let sigma = pauli::xyz();
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for (a, sa) in sigma.iter().enumerate() {
            for i in 0..n {
                mean[a] += 0.5 * crate::linalg::local_product_trace(m, s, &[(i, sa)]).re;
            }
            second[a][a] += n as f64 / 4.0;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for (a, sa) in sigma.iter().enumerate() {
                    for (b, sb) in sigma.iter().enumerate() {
                        let c = crate::linalg::local_product_trace(m, s, &[(i, sa), (j, sb)]).re;
                        // ordered pairs (i,j) and (j,i) contribute to S_ab and S_ba
                        second[a][b] += 0.25 * c;
                        second[b][a] += 0.25 * c;
                    }
                }
            }
        }
        Ok(Self { n, mean, second })
    }

    pub fn mean_along(&self, u: [f64; 3]) -> f64 {
        (0..3).map(|a| u[a] * self.mean[a]).sum()
    }

    pub fn second_along(&self, u: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += u[a] * u[b] * self.second[a][b];
            }
        }
        acc
    }

    pub fn variance_along(&self, u: [f64; 3]) -> f64 {
        self.second_along(u) - self.mean_along(u).powi(2)
    }

    /// Σ_l Var(J_l).
    pub fn total_variance(&self) -> f64 {
        (0..3)
            .map(|a| self.second[a][a] - self.mean[a] * self.mean[a])
            .sum()
    }
}

/// ⟨Λ_m⟩ and Re⟨Λ_m Λ_n⟩ for qudits, from dense operators.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaMoments {
    pub d: usize,
    pub mean: Vec<f64>,
    pub second: Vec<Vec<f64>>,
}

impl LambdaMoments {
    pub fn of(rho: &crate::states::DensityMatrix) -> Result<Self> {
        let d = rho.local_dim();
        let ops = collective_lambdas(rho.n_parties(), d)?;
        let mean: Vec<f64> = ops.iter().map(|o| rho.expect(o.matrix())).collect();
        let rho_ops: Vec<ComplexMatrix> = ops
            .iter()
            .map(|o| rho.matrix().matmul(o.matrix()))
            .collect();
        let k = ops.len();
        let mut second = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                // Re tr(ρ Λ_a Λ_b) is symmetric in (a, b)
                let v = rho_ops[a].trace_product(ops[b].matrix()).re;
                second[a][b] = v;
                second[b][a] = v;
            }
        }
        Ok(Self { d, mean, second })
    }

    /// Σ_l Var(Λ_l).
    pub fn total_variance(&self) -> f64 {
        (0..self.mean.len())
            .map(|a| self.second[a][a] - self.mean[a] * self.mean[a])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, kron, rank, swap_operator, I};
    use crate::states::{dicke, phased_dicke, random, DensityMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const X: [f64; 3] = [1.0, 0.0, 0.0];
    const Y: [f64; 3] = [0.0, 1.0, 0.0];
    const Z: [f64; 3] = [0.0, 0.0, 1.0];

    #[test]
    fn single_qubit_jz() {
        let j = collective_j(1, Z).unwrap();
        assert_eq!(j.matrix(), &pauli::z().scale_real(0.5));
        assert_eq!(j.label(), OperatorLabel::Jz);
    }

    #[test]
    fn bad_direction() {
        assert!(matches!(
            collective_j(2, [1.0, 1.0, 0.0]),
            Err(Error::BadDirection(_))
        ));
    }

    #[test]
    fn su2_algebra_up_to_six() {
        for n in 1..=6 {
            let j = collective_axes(n).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    let comm = j[a].matrix().commutator(j[b].matrix());
                    let mut want = ComplexMatrix::zeros(1 << n, 1 << n);
                    for c in 0..3 {
                        want.axpy(I * pauli::levi_civita(a, b, c), j[c].matrix());
                    }
                    assert!(comm.max_abs_diff(&want) <= 1e-11, "n={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn two_qubit_jz_spectrum() {
        let v = eigvalsh(collective_j(2, Z).unwrap().matrix()).unwrap();
        let want = [-1.0, 0.0, 0.0, 1.0];
        assert!(v.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn gell_mann_qubit_is_pauli() {
        let g = gell_mann(2).unwrap();
        assert_eq!(g[0], pauli::x());
        assert_eq!(g[1], pauli::y());
        assert!(g[2].max_abs_diff(&pauli::z()) < 1e-15);
        assert!(gell_mann(1).is_err());
    }

    #[test]
    fn gell_mann_normalization_and_completeness() {
        for d in 2..=5 {
            let g = gell_mann(d).unwrap();
            assert_eq!(g.len(), d * d - 1);
            let mut sum = ComplexMatrix::zeros(d, d);
            for (k, a) in g.iter().enumerate() {
                assert!(a.is_hermitian(1e-15));
                assert!(a.trace().norm() < 1e-14);
                for (l, b) in g.iter().enumerate() {
                    let want = if k == l { d as f64 } else { 0.0 };
                    assert!((a.trace_product(b).re - want).abs() < 1e-12);
                }
                sum += &a.matmul(a);
            }
            let want = ComplexMatrix::identity(d).scale_real((d * d - 1) as f64);
            assert!(sum.max_abs_diff(&want) < 1e-12, "d={d}");
        }
        let g = gell_mann(3).unwrap();
        assert!(g[0].trace_product(&g[1]).norm() < 1e-15);
        assert!((g[0].trace_product(&g[0]).re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_consistency() {
        for (l, u) in [X, Y, Z].into_iter().enumerate() {
            let lam = collective_lambda(3, 2, l + 1).unwrap();
            let j = collective_j(3, u).unwrap();
            assert!(lam.matrix().max_abs_diff(j.matrix()) < 1e-15);
        }
        let g = gell_mann(3).unwrap();
        for l in 1..=8 {
            let lam = collective_lambda(1, 3, l).unwrap();
            assert!(lam.matrix().max_abs_diff(&g[l - 1].scale_real(1.0 / 3.0)) < 1e-15);
        }
        assert!(collective_lambda(2, 3, 0).is_err());
        assert!(collective_lambda(2, 3, 9).is_err());
    }

    #[test]
    fn lambda_square_on_maximally_mixed() {
        let mm = DensityMatrix::maximally_mixed(PartyStructure::new(2, 3));
        for l in 1..=8 {
            let lam = collective_lambda(2, 3, l).unwrap();
            let sq = rho_expect_sq(&mm, lam.matrix());
            assert!((sq - 2.0 / 9.0).abs() < 1e-14);
        }
    }

    fn rho_expect_sq(rho: &DensityMatrix, op: &ComplexMatrix) -> f64 {
        rho.expect(&op.matmul(op))
    }

    #[test]
    fn o_s_two_constructions_agree() {
        for n in 3..=5 {
            let a = build_o_s(n).unwrap();
            let b = o_s_from_collective(n).unwrap();
            assert!(a.matrix().max_abs_diff(&b) <= 1e-10, "n={n}");
            assert!(a.matrix().trace().norm() < 1e-12);
        }
    }

    #[test]
    fn triple_operators_exchange_symmetry() {
        for n in [3, 4, 5] {
            let s = PartyStructure::qubits(n);
            let os = build_o_s(n).unwrap();
            let oa = build_o_a(n).unwrap();
            for a in 0..n {
                for b in (a + 1)..n {
                    let sw = swap_operator(s, a, b).unwrap();
                    let cs = sw.matmul(os.matrix()).matmul(&sw);
                    assert!(cs.max_abs_diff(os.matrix()) < 1e-12);
                }
            }
            // cyclic shift k -> k+1 as a product of adjacent swaps
            let mut shift = ComplexMatrix::identity(s.dim());
            for k in 0..n - 1 {
                shift = shift.matmul(&swap_operator(s, k, k + 1).unwrap());
            }
            let ca = shift.matmul(oa.matrix()).matmul(&shift.adjoint());
            assert!(ca.max_abs_diff(oa.matrix()) < 1e-12, "n={n}");
        }
        // a single exchange reverses the orientation of every triple for N = 3
        let oa = build_o_a(3).unwrap();
        let sw = swap_operator(PartyStructure::qubits(3), 0, 1).unwrap();
        let ca = sw.matmul(oa.matrix()).matmul(&sw);
        assert!(ca.max_abs_diff(&oa.matrix().scale_real(-1.0)) < 1e-12);
    }

    #[test]
    fn o_a_three_qubit_spectrum() {
        let v = eigvalsh(build_o_a(3).unwrap().matrix()).unwrap();
        let r = 2.0 * 3f64.sqrt();
        let want = [-r, -r, 0.0, 0.0, 0.0, 0.0, r, r];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{v:?}");
        }
    }

    #[test]
    fn o_a_ranks() {
        for (n, want) in [(4, 6), (5, 24)] {
            assert_eq!(rank(build_o_a(n).unwrap().matrix(), 1e-8).unwrap(), want);
        }
    }

    #[test]
    fn phased_dicke_is_top_eigenvector() {
        let oa = build_o_a(3).unwrap();
        let r = 2.0 * 3f64.sqrt();
        for flipped in [false, true] {
            let z = phased_dicke(3, flipped).unwrap();
            let v = oa.matrix().matvec(z.amplitudes());
            for (a, b) in v.iter().zip(z.amplitudes()) {
                assert!((a - b * r).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn o_a_label_swap_flips_sign() {
        // exchanging σ_x and σ_y in every term negates the three-qubit O_A
        let oa = build_o_a(3).unwrap();
        let swapped = triple_sum(3, |p| {
            let q = p.map(|a| match a {
                0 => 1,
                1 => 0,
                a => a,
            });
            pauli::levi_civita(q[0], q[1], q[2])
        });
        assert!((&swapped + oa.matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn o_a_matches_correlation_sum() {
        let oa = build_o_a(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let rho = random::pure_state(PartyStructure::qubits(3), &mut rng).density();
            let mut sum = 0.0;
            for p in PERMUTATIONS {
                sum += pauli::levi_civita(p[0], p[1], p[2]) * rho.expect(&pauli_string(&p));
            }
            assert!((rho.expect(oa.matrix()) - sum).abs() <= 1e-10);
        }
    }

    #[test]
    fn w_s_reduces_to_o_a() {
        let ws = build_w_s(&levi_civita_tensor(), &pauli::xyz()).unwrap();
        assert!(ws.matrix().max_abs_diff(build_o_a(3).unwrap().matrix()) < 1e-15);
        let zeros = vec![vec![vec![0.0; 3]; 3]; 3];
        assert_eq!(
            build_w_s(&zeros, &pauli::xyz()).unwrap().matrix().max_abs(),
            0.0
        );
        let g: Vec<ComplexMatrix> = gell_mann(3).unwrap().into_iter().take(3).collect();
        assert!(build_w_s(&levi_civita_tensor(), &g)
            .unwrap()
            .matrix()
            .is_hermitian(1e-12));
        let bad = vec![pauli::x(), ComplexMatrix::identity(3), pauli::z()];
        assert!(matches!(
            build_w_s(&levi_civita_tensor(), &bad),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn variance(rho: &DensityMatrix, op: &ComplexMatrix) -> f64 {
        rho.expect(&op.matmul(op)) - rho.expect(op).powi(2)
    }

    #[test]
    fn two_ensemble_dicke_variances() {
        let rho = dicke(4, 2).unwrap().density();
        let jm = two_ensemble_j(2, 2, Sign::Minus).unwrap();
        let jp = two_ensemble_j(2, 0, Sign::Plus).unwrap();
        // N_AB = 4
        assert!((variance(&rho, jm.matrix()) - 16.0 / 12.0).abs() < 1e-12);
        assert!((variance(&rho, jp.matrix()) - 3.0).abs() < 1e-12);
        let zero = dicke(4, 0).unwrap().density();
        assert!(zero.expect(jm.matrix()).abs() < 1e-15);
    }

    #[test]
    fn two_ensemble_is_kron_sum() {
        let ja = collective_j(2, X).unwrap();
        let id = ComplexMatrix::identity(4);
        let want = &kron(ja.matrix(), &id) - &kron(&id, ja.matrix());
        let got = two_ensemble_j(2, 0, Sign::Minus).unwrap();
        assert!(got.matrix().max_abs_diff(&want) < 1e-15);
        assert!(two_ensemble_j(7, 0, Sign::Plus).is_err());
    }

    #[test]
    fn spin_moments_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = random::mixed_state(PartyStructure::qubits(4), 3, &mut rng);
        let sm = SpinMoments::of(&rho).unwrap();
        let j = collective_axes(4).unwrap();
        for a in 0..3 {
            assert!((sm.mean[a] - rho.expect(j[a].matrix())).abs() < 1e-12);
            for b in 0..3 {
                let want = rho
                    .matrix()
                    .matmul(j[a].matrix())
                    .trace_product(j[b].matrix())
                    .re;
                assert!((sm.second[a][b] - want).abs() < 1e-12);
            }
        }
        let u = random::unit_vector(&mut rng);
        let ju = collective_j(4, u).unwrap();
        assert!((sm.variance_along(u) - variance(&rho, ju.matrix())).abs() < 1e-12);
    }

    #[test]
    fn cache_returns_same_operator() {
        let a = cached_o_a(3).unwrap();
        let b = cached_o_a(3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(cached_o_a(2).is_err());
    }
}
