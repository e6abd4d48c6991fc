//! Random moments of collective spin observables, by Monte Carlo and in
//! closed form.
//!
//! f_U(ρ) = α Var(J_z)_U + β ⟨J_z⟩²_U + γ depends on the collective rotation
//! U only through the rotated axis u = R(U) z, so the default sampler draws u
//! uniformly on the sphere and evaluates f from the precomputed first and
//! second spin moments. The unitary sampler conjugates ρ by U^{⊗N} instead
//! and serves as the reference path.

mod design;
mod haar;
mod two_ensemble;

pub use design::{design_quadrature_moment, SphericalDesign};
pub use haar::{
    haar_unitary, random_direction, rotated_axis, sample_haar_su2, unitarity_defect,
    unitary_for_axis,
};
pub use two_ensemble::{
    two_ensemble_lhs, two_ensemble_mc, CrossCorrelation, TwoEnsembleEstimate, TwoEnsembleLhs,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::collective::{check_direction, gell_mann, LambdaMoments, SpinMoments};
use crate::error::{Error, Result};
use crate::exec::{mean_and_std_error, sample_chunked, Execution};
use crate::linalg::{hermitian_eig, local_product_trace, pauli, ComplexMatrix};
use crate::states::{is_permutationally_symmetric, DensityMatrix};

/// (α, β, γ) and the moment order r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "r")]
    pub order: u32,
}

impl MomentSpec {
    pub fn new(alpha: f64, beta: f64, gamma: f64, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::OutOfRange("moment order must be >= 1".into()));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            order,
        })
    }

    /// Parameters for which f_U equals the pair covariance along u:
    /// (4/N₂, 4/(N N₂), −1/(N−1)) with N₂ = N(N−1).
    pub fn obs1(n: usize, order: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!(
                "obs1 preset needs N >= 2, got {n}"
            )));
        }
        let nf = n as f64;
        let n2 = nf * (nf - 1.0);
        Self::new(4.0 / n2, 4.0 / (nf * n2), -1.0 / (nf - 1.0), order)
    }

    /// (3, 0, 0): the first moment is Σ_l Var(J_l).
    pub fn obs2(order: u32) -> Result<Self> {
        Self::new(3.0, 0.0, 0.0, order)
    }

    /// (0, 12/N², 0): the first moment is |⟨J⟩|² · 4/N².
    pub fn obs4(n: usize, order: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("obs4 preset needs N >= 1".into()));
        }
        Self::new(0.0, 12.0 / (n * n) as f64, 0.0, order)
    }

    pub fn with_order(self, order: u32) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.gamma, order)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    #[default]
    Direction,
    Unitary,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Direction => "direction",
            SamplingMode::Unitary => "unitary",
        })
    }
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direction" => Ok(Self::Direction),
            "unitary" => Ok(Self::Unitary),
            other => Err(Error::Parse(format!("unknown sampling mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub mode: SamplingMode,
    pub spec: MomentSpec,
    pub seed: u64,
}

impl MomentEstimate {
    fn from_samples(xs: &[f64], mode: SamplingMode, spec: MomentSpec, seed: u64) -> Self {
        let (mean, std_error) = mean_and_std_error(xs);
        Self {
            mean,
            std_error,
            samples: xs.len(),
            mode,
            spec,
            seed,
        }
    }

    /// |self − other| in units of the joint standard error.
    pub fn z_distance(&self, other: &MomentEstimate) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let diff = (self.mean - other.mean).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }
}

fn check_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.local_dim() != 2 {
        return Err(Error::OutOfRange(format!(
            "qubit ensemble required, got local dimension {}",
            rho.local_dim()
        )));
    }
    Ok(())
}

/// f from first and second spin moments along u.
pub fn f_from_moments(sm: &SpinMoments, u: [f64; 3], spec: &MomentSpec) -> f64 {
    let mean = sm.mean_along(u);
    let var = sm.second_along(u) - mean * mean;
    spec.alpha * var + spec.beta * mean * mean + spec.gamma
}

/// α Var(J_u) + β ⟨J_u⟩² + γ.
pub fn f_value(rho: &DensityMatrix, u: [f64; 3], spec: &MomentSpec) -> Result<f64> {
    check_qubits(rho)?;
    check_direction(u)?;
    Ok(f_from_moments(&SpinMoments::of(rho)?, u, spec))
}

/// f after rotating ρ by U†^{⊗N}, read off the J_z diagonal.
pub fn f_value_unitary(rho: &DensityMatrix, u: &ComplexMatrix, spec: &MomentSpec) -> f64 {
    let rotated = rho.rotate_collective(&u.adjoint());
    let (mean, second) = jz_moments_from_diagonal(&rotated);
    spec.alpha * (second - mean * mean) + spec.beta * mean * mean + spec.gamma
}

/// Distribution of J_z eigenvalues (N − 2k)/2, indexed by k.
pub fn jz_distribution(rho: &DensityMatrix) -> Vec<f64> {
    let n = rho.n_parties();
    let mut p = vec![0.0; n + 1];
    for i in 0..rho.dim() {
        p[i.count_ones() as usize] += rho.matrix()[(i, i)].re;
    }
    p
}

fn jz_moments_from_diagonal(rho: &DensityMatrix) -> (f64, f64) {
    let n = rho.n_parties() as f64;
    let p = jz_distribution(rho);
    let mut mean = 0.0;
    let mut second = 0.0;
    for (k, pk) in p.iter().enumerate() {
        let m = (n - 2.0 * k as f64) / 2.0;
        mean += pk * m;
        second += pk * m * m;
    }
    (mean, second)
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::OutOfRange(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    Ok(())
}

/// Draws of f_U for `samples` random rotations.
pub fn sample_f(
    rho: &DensityMatrix,
    spec: &MomentSpec,
    samples: usize,
    seed: u64,
    mode: SamplingMode,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_qubits(rho)?;
    match mode {
        SamplingMode::Direction => {
            let sm = SpinMoments::of(rho)?;
            Ok(sample_chunked(samples, seed, exec, |rng| {
                f_from_moments(&sm, random_direction(rng), spec)
            }))
        }
        SamplingMode::Unitary => Ok(sample_chunked(samples, seed, exec, |rng| {
            f_value_unitary(rho, &sample_haar_su2(rng), spec)
        })),
    }
}

/// Monte Carlo estimate of 𝒥^(r) = ∫dU [f_U(ρ)]^r.
pub fn moment_mc(
    rho: &DensityMatrix,
    spec: &MomentSpec,
    samples: usize,
    seed: u64,
    mode: SamplingMode,
    exec: Execution,
) -> Result<MomentEstimate> {
    check_samples(samples)?;
    let r = spec.order as i32;
    let xs: Vec<f64> = sample_f(rho, spec, samples, seed, mode, exec)?
        .into_iter()
        .map(|f| f.powi(r))
        .collect();
    Ok(MomentEstimate::from_samples(&xs, mode, *spec, seed))
}

/// Estimates for orders 1..=max_order from one set of draws.
pub fn moments_mc(
    rho: &DensityMatrix,
    spec: &MomentSpec,
    max_order: u32,
    samples: usize,
    seed: u64,
    mode: SamplingMode,
    exec: Execution,
) -> Result<Vec<MomentEstimate>> {
    check_samples(samples)?;
    let fs = sample_f(rho, spec, samples, seed, mode, exec)?;
    (1..=max_order)
        .map(|r| {
            let xs: Vec<f64> = fs.iter().map(|f| f.powi(r as i32)).collect();
            Ok(MomentEstimate::from_samples(
                &xs,
                mode,
                spec.with_order(r)?,
                seed,
            ))
        })
        .collect()
}

/// ∫ Π (2 u_{i_k}) over the sphere for 2, 4 or 6 axis labels in {0, 1, 2}:
/// (4/3) δ_ij, (16/15)(δδ + δδ + δδ) and the 15-pairing (64/105) sum.
pub fn haar_integral_identities(indices: &[usize]) -> Result<f64> {
    let prefactor = match indices.len() {
        2 => 4.0 / 3.0,
        4 => 16.0 / 15.0,
        6 => 64.0 / 105.0,
        n => return Err(Error::BadArity(n)),
    };
    if let Some(&bad) = indices.iter().find(|&&i| i > 2) {
        return Err(Error::OutOfRange(format!("axis label {bad} outside 0..=2")));
    }
    Ok(prefactor * pairing_sum(indices) as f64)
}

/// Number of perfect pairings of the labels with equal partners.
fn pairing_sum(ix: &[usize]) -> usize {
    if ix.is_empty() {
        return 1;
    }
    let first = ix[0];
    let rest = &ix[1..];
    (0..rest.len())
        .filter(|&k| rest[k] == first)
        .map(|k| {
            let mut remaining = rest.to_vec();
            remaining.remove(k);
            pairing_sum(&remaining)
        })
        .sum()
}

/// 𝒥^(1) for (3,0,0): Σ_l Var(J_l).
pub fn j1_closed_form(rho: &DensityMatrix) -> Result<f64> {
    check_qubits(rho)?;
    Ok(SpinMoments::of(rho)?.total_variance())
}

/// 𝒟 = Σ_l Var(Λ_l).
pub fn d_closed_form(rho: &DensityMatrix, d: usize) -> Result<f64> {
    if rho.local_dim() != d {
        return Err(Error::ShapeMismatch(format!(
            "state has local dimension {}, expected {d}",
            rho.local_dim()
        )));
    }
    Ok(LambdaMoments::of(rho)?.total_variance())
}

/// Monte Carlo 𝒟: (d²−1) times the Haar average of Var(Λ_1) under U^{⊗N}.
pub fn d_mc(
    rho: &DensityMatrix,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<MomentEstimate> {
    check_samples(samples)?;
    let d = rho.local_dim();
    let lm = LambdaMoments::of(rho)?;
    let lambdas = gell_mann(d)?;
    let k = lambdas.len();
    let df = d as f64;
    let xs = sample_chunked(samples, seed, exec, |rng| {
        let u = haar_unitary(d, rng);
        let rotated = u.matmul(&lambdas[0]).matmul(&u.adjoint());
        // U λ_1 U† = Σ_m R_m λ_m
        let r: Vec<f64> = lambdas
            .iter()
            .map(|l| l.trace_product(&rotated).re / df)
            .collect();
        let mean: f64 = (0..k).map(|m| r[m] * lm.mean[m]).sum();
        let mut second = 0.0;
        for a in 0..k {
            for b in 0..k {
                second += r[a] * r[b] * lm.second[a][b];
            }
        }
        k as f64 * (second - mean * mean)
    });
    let spec = MomentSpec::new(k as f64, 0.0, 0.0, 1)?;
    Ok(MomentEstimate::from_samples(
        &xs,
        SamplingMode::Unitary,
        spec,
        seed,
    ))
}

const TRIPLE_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 2, 0],
    [2, 0, 1],
    [0, 2, 1],
    [2, 1, 0],
    [1, 0, 2],
];

/// 𝒯 = tr(ρ O_A) = Σ_{i<j<k} Σ ε_lmn ⟨σ_l^{(i)} σ_m^{(j)} σ_n^{(k)}⟩.
pub fn t_average(rho: &DensityMatrix) -> Result<f64> {
    check_qubits(rho)?;
    let n = rho.n_parties();
    if n < 3 {
        return Err(Error::OutOfRange(format!("𝒯 needs N >= 3, got {n}")));
    }
    let s = rho.structure();
    let sigma = pauli::xyz();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for p in TRIPLE_PERMUTATIONS {
                    let eps = pauli::levi_civita(p[0], p[1], p[2]);
                    let ops = [(i, &sigma[p[0]]), (j, &sigma[p[1]]), (k, &sigma[p[2]])];
                    acc += eps * local_product_trace(rho.matrix(), s, &ops).re;
                }
            }
        }
    }
    Ok(acc)
}

/// Monte Carlo 𝒯 over Haar collective rotations.
pub fn t_mc(
    rho: &DensityMatrix,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<MomentEstimate> {
    check_samples(samples)?;
    t_average(rho)?;
    let xs = sample_chunked(samples, seed, exec, |rng| {
        let u = sample_haar_su2(rng);
        t_average(&rho.rotate_collective(&u.adjoint())).expect("validated above")
    });
    let spec = MomentSpec::new(0.0, 0.0, 0.0, 1)?;
    Ok(MomentEstimate::from_samples(
        &xs,
        SamplingMode::Unitary,
        spec,
        seed,
    ))
}

/// Two-body correlations of a two-qubit state: t_pq = ⟨σ_p ⊗ σ_q⟩,
/// a = ⟨σ ⊗ 1⟩, b = ⟨1 ⊗ σ⟩ and C = t − a bᵀ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub entries: [[f64; 3]; 3],
    pub t: [[f64; 3]; 3],
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub symmetric: bool,
}

pub const COVARIANCE_SYMMETRY_TOL: f64 = 1e-10;

impl CovarianceMatrix {
    /// From parties (p, q) of a qubit state.
    pub fn from_pair(rho: &DensityMatrix, p: usize, q: usize) -> Result<Self> {
        check_qubits(rho)?;
        let n = rho.n_parties();
        if p == q || p >= n || q >= n {
            return Err(Error::BadPartition(format!(
                "invalid pair ({p}, {q}) for {n} qubits"
            )));
        }
        let s = rho.structure();
        let m = rho.matrix();
        let sigma = pauli::xyz();
        let mut t = [[0.0; 3]; 3];
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for i in 0..3 {
            a[i] = local_product_trace(m, s, &[(p, &sigma[i])]).re;
            b[i] = local_product_trace(m, s, &[(q, &sigma[i])]).re;
            for j in 0..3 {
                t[i][j] = local_product_trace(m, s, &[(p, &sigma[i]), (q, &sigma[j])]).re;
            }
        }
        Ok(Self::from_parts(t, a, b))
    }

    pub fn from_parts(t: [[f64; 3]; 3], a: [f64; 3], b: [f64; 3]) -> Self {
        let mut entries = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                entries[i][j] = t[i][j] - a[i] * b[j];
            }
        }
        let symmetric = (0..3).all(|i| {
            (0..3).all(|j| (entries[i][j] - entries[j][i]).abs() <= COVARIANCE_SYMMETRY_TOL)
        });
        Self {
            entries,
            t,
            a,
            b,
            symmetric,
        }
    }

    fn as_matrix(&self) -> [[f64; 3]; 3] {
        self.entries
    }

    /// (tr C, tr C², tr C³).
    pub fn trace_powers(&self) -> (f64, f64, f64) {
        let c = self.as_matrix();
        let c2 = mat3_mul(&c, &c);
        let c3 = mat3_mul(&c2, &c);
        let tr = |m: &[[f64; 3]; 3]| m[0][0] + m[1][1] + m[2][2];
        (tr(&c), tr(&c2), tr(&c3))
    }

    /// Σ C_pq².
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().flatten().map(|x| x * x).sum()
    }

    /// Eigenvalues (ascending) of the symmetric part of C.
    pub fn eigenvalues(&self) -> Result<[f64; 3]> {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| {
            num_complex::Complex64::new(0.5 * (self.entries[i][j] + self.entries[j][i]), 0.0)
        });
        let v = hermitian_eig(&m)?.values;
        Ok([v[0], v[1], v[2]])
    }
}

pub(crate) fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Closed-form moments for the obs1 preset, from the covariance of the (0, 1) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obs1Moments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub covariance: CovarianceMatrix,
}

/// m1 = tr C / 3, m2 = [(tr C)² + 2 tr C²] / 15,
/// m3 = [tr C ((tr C)² + 6 tr C²) + 8 tr C³] / 105.
pub fn moments_from_traces(tr1: f64, tr2: f64, tr3: f64) -> (f64, f64, f64) {
    (
        tr1 / 3.0,
        (tr1 * tr1 + 2.0 * tr2) / 15.0,
        (tr1 * (tr1 * tr1 + 6.0 * tr2) + 8.0 * tr3) / 105.0,
    )
}

pub fn obs1_moments(rho: &DensityMatrix) -> Result<Obs1Moments> {
    check_qubits(rho)?;
    if rho.n_parties() < 2 {
        return Err(Error::OutOfRange("obs1 moments need N >= 2".into()));
    }
    if !is_permutationally_symmetric(rho) {
        return Err(Error::NotSymmetric(
            "obs1 moments need a permutationally symmetric state".into(),
        ));
    }
    let pair = rho.reduce(&[0, 1])?;
    let covariance = CovarianceMatrix::from_pair(&pair, 0, 1)?;
    let (t1, t2, t3) = covariance.trace_powers();
    let (m1, m2, m3) = moments_from_traces(t1, t2, t3);
    Ok(Obs1Moments {
        m1,
        m2,
        m3,
        covariance,
    })
}

/// Cov_u = ⟨σ_u ⊗ σ_u⟩ − ⟨σ_u⟩² of parties (0, 1).
pub fn pair_covariance_along(rho: &DensityMatrix, u: [f64; 3]) -> Result<f64> {
    let c = CovarianceMatrix::from_pair(rho, 0, 1)?;
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += u[i] * u[j] * c.entries[i][j];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::collective_j;
    use crate::exec::stream_rng;
    use crate::linalg::PartyStructure;
    use crate::states::{depolarize, dicke, ghz, random, singlet_state};

    const SEQ: Execution = Execution::Sequential;

    fn dense_f(rho: &DensityMatrix, u: [f64; 3], spec: &MomentSpec) -> f64 {
        let j = collective_j(rho.n_parties(), u).unwrap();
        let mean = rho.expect(j.matrix());
        let var = rho.expect(&j.matrix().matmul(j.matrix())) - mean * mean;
        spec.alpha * var + spec.beta * mean * mean + spec.gamma
    }

    #[test]
    fn presets() {
        let s = MomentSpec::obs1(4, 1).unwrap();
        assert!((s.alpha - 4.0 / 12.0).abs() < 1e-15);
        assert!((s.beta - 4.0 / 48.0).abs() < 1e-15);
        assert!((s.gamma + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            MomentSpec::obs2(1).unwrap(),
            MomentSpec::new(3.0, 0.0, 0.0, 1).unwrap()
        );
        assert_eq!(MomentSpec::obs4(2, 1).unwrap().beta, 3.0);
        assert!(MomentSpec::new(1.0, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let v = serde_json::to_value(MomentSpec::obs2(2).unwrap()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"alpha": 3.0, "beta": 0.0, "gamma": 0.0, "r": 2})
        );
    }

    #[test]
    fn f_value_examples() {
        let obs2 = MomentSpec::obs2(1).unwrap();
        let singlet = singlet_state(2, 1, 0).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..5 {
            let u = random_direction(&mut rng);
            assert!(f_value(&singlet, u, &obs2).unwrap().abs() < 1e-14);
        }
        let mm = DensityMatrix::maximally_mixed(PartyStructure::qubits(2));
        assert!((f_value(&mm, [0.0, 0.0, 1.0], &obs2).unwrap() - 1.5).abs() < 1e-14);
        assert!(f_value(&mm, [0.0, 0.0, 2.0], &obs2).is_err());
    }

    #[test]
    fn f_value_matches_dense_and_unitary_paths() {
        let mut rng = stream_rng(6, 0);
        let spec = MomentSpec::new(0.7, -1.3, 0.2, 1).unwrap();
        for _ in 0..10 {
            let rho = random::mixed_state(PartyStructure::qubits(3), 2, &mut rng);
            let u = random_direction(&mut rng);
            let direct = f_value(&rho, u, &spec).unwrap();
            assert!((direct - dense_f(&rho, u, &spec)).abs() < 1e-10);
            let via_u = f_value_unitary(&rho, &unitary_for_axis(u), &spec);
            assert!((direct - via_u).abs() < 1e-10);
        }
    }

    #[test]
    fn obs1_preset_is_pair_covariance() {
        let mut rng = stream_rng(7, 0);
        for n in 2..=5 {
            let spec = MomentSpec::obs1(n, 1).unwrap();
            let rho = random::symmetric_state(n, 2, &mut rng);
            let pair = rho.reduce(&[0, 1]).unwrap();
            for _ in 0..5 {
                let u = random_direction(&mut rng);
                let f = f_value(&rho, u, &spec).unwrap();
                let cov = pair_covariance_along(&pair, u).unwrap();
                assert!((f - cov).abs() <= 1e-10, "n={n}: {f} vs {cov}");
            }
        }
    }

    #[test]
    fn constant_spec_gives_gamma() {
        let rho = dicke(3, 1).unwrap().density();
        let spec = MomentSpec::new(0.0, 0.0, 0.25, 1).unwrap();
        for mode in [SamplingMode::Direction, SamplingMode::Unitary] {
            let e = moment_mc(&rho, &spec, 100, 1, mode, SEQ).unwrap();
            assert_eq!(e.mean, 0.25);
            assert_eq!(e.std_error, 0.0);
        }
    }

    #[test]
    fn depolarized_singlet_first_moment() {
        let rho = depolarize(&singlet_state(4, 3, 2).unwrap(), 0.5).unwrap();
        let e = moment_mc(
            &rho,
            &MomentSpec::obs2(1).unwrap(),
            10_000,
            3,
            SamplingMode::Direction,
            SEQ,
        )
        .unwrap();
        assert!(
            (e.mean - 1.5).abs() <= 3.0 * e.std_error.max(1e-12),
            "{e:?}"
        );
        assert!((j1_closed_form(&rho).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn triplet_obs1_first_moment() {
        let rho = dicke(2, 1).unwrap().density();
        let spec = MomentSpec::obs1(2, 1).unwrap();
        let e = moment_mc(&rho, &spec, 10_000, 4, SamplingMode::Direction, SEQ).unwrap();
        assert!((e.mean - 1.0 / 3.0).abs() <= 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn modes_agree() {
        let mut rng = stream_rng(8, 0);
        let spec = MomentSpec::obs2(2).unwrap();
        for k in 0..4 {
            let rho = random::mixed_state(PartyStructure::qubits(3), 2, &mut rng);
            let a = moment_mc(&rho, &spec, 4000, k, SamplingMode::Direction, SEQ).unwrap();
            let b = moment_mc(&rho, &spec, 4000, k + 100, SamplingMode::Unitary, SEQ).unwrap();
            assert!(a.z_distance(&b) < 4.0, "{a:?} {b:?}");
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let rho = dicke(4, 2).unwrap().density();
        let spec = MomentSpec::obs2(1).unwrap();
        for mode in [SamplingMode::Direction, SamplingMode::Unitary] {
            let a = moment_mc(&rho, &spec, 3000, 9, mode, Execution::Parallel).unwrap();
            let b = moment_mc(&rho, &spec, 3000, 9, mode, SEQ).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn haar_identities() {
        assert!((haar_integral_identities(&[0, 0]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(haar_integral_identities(&[0, 1]).unwrap(), 0.0);
        assert!((haar_integral_identities(&[0, 0, 1, 1]).unwrap() - 16.0 / 15.0).abs() < 1e-15);
        assert!((haar_integral_identities(&[2, 2, 2, 2]).unwrap() - 48.0 / 15.0).abs() < 1e-15);
        assert!((haar_integral_identities(&[0; 6]).unwrap() - 15.0 * 64.0 / 105.0).abs() < 1e-13);
        assert!(matches!(
            haar_integral_identities(&[0, 1, 2]),
            Err(Error::BadArity(3))
        ));
    }

    #[test]
    fn haar_identity_mc() {
        let xs = sample_chunked(1_000_000, 10, Execution::Parallel, |rng| {
            let u = random_direction(rng);
            (2.0 * u[0]).powi(2) * (2.0 * u[1]).powi(2)
        });
        let (m, _) = mean_and_std_error(&xs);
        assert!((m / (16.0 / 15.0) - 1.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn j1_examples() {
        assert!(
            j1_closed_form(&singlet_state(2, 1, 0).unwrap())
                .unwrap()
                .abs()
                < 1e-14
        );
        let mm = DensityMatrix::maximally_mixed(PartyStructure::qubits(2));
        assert!((j1_closed_form(&mm).unwrap() - 1.5).abs() < 1e-14);
        for p in [0.0, 0.3, 1.0] {
            let rho = depolarize(&singlet_state(6, 2, 1).unwrap(), p).unwrap();
            assert!((j1_closed_form(&rho).unwrap() - 4.5 * p).abs() < 1e-12);
        }
    }

    #[test]
    fn d_examples() {
        let mut rng = stream_rng(11, 0);
        for d in [2, 3, 4] {
            let psi = random::pure_state(PartyStructure::new(1, d), &mut rng).density();
            let want = (d as f64 - 1.0) / d as f64;
            assert!((d_closed_form(&psi, d).unwrap() - want).abs() < 1e-12);
        }
        let mm = DensityMatrix::maximally_mixed(PartyStructure::new(2, 3));
        assert!((d_closed_form(&mm, 3).unwrap() - 16.0 / 9.0).abs() < 1e-12);
        let rho = random::mixed_state(PartyStructure::qubits(3), 2, &mut rng);
        assert!((d_closed_form(&rho, 2).unwrap() - j1_closed_form(&rho).unwrap()).abs() < 1e-12);
        assert!(d_closed_form(&rho, 3).is_err());
    }

    #[test]
    fn d_mc_matches_closed_form() {
        let mut rng = stream_rng(12, 0);
        let rho = random::mixed_state(PartyStructure::new(2, 3), 2, &mut rng);
        let e = d_mc(&rho, 10_000, 5, SEQ).unwrap();
        let want = d_closed_form(&rho, 3).unwrap();
        assert!(
            (e.mean - want).abs() <= 3.0 * e.std_error,
            "{e:?} vs {want}"
        );
    }

    #[test]
    fn t_average_examples() {
        let r = 2.0 * 3f64.sqrt();
        let z = crate::states::phased_dicke(3, false).unwrap().density();
        assert!((t_average(&z).unwrap() - r).abs() < 1e-12);
        assert!(t_average(&dicke(3, 0).unwrap().density()).unwrap().abs() < 1e-15);
        for (x, y) in [(0.1, 0.2), (0.4, 0.4), (0.0, 1.0)] {
            let rho = crate::states::mixed_family(3, x, y).unwrap();
            assert!((t_average(&rho).unwrap() - r * (x + y)).abs() < 1e-12);
        }
        assert!(t_average(&dicke(2, 1).unwrap().density()).is_err());
    }

    #[test]
    fn t_average_matches_dense_o_a_and_is_invariant() {
        let mut rng = stream_rng(13, 0);
        for n in 3..=5 {
            let oa = crate::collective::build_o_a(n).unwrap();
            let rho = random::mixed_state(PartyStructure::qubits(n), 2, &mut rng);
            let t = t_average(&rho).unwrap();
            assert!((t - rho.expect(oa.matrix())).abs() < 1e-10);
            let u = sample_haar_su2(&mut rng);
            assert!((t_average(&rho.rotate_collective(&u)).unwrap() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn obs1_examples() {
        let zero = obs1_moments(&dicke(4, 0).unwrap().density()).unwrap();
        assert!(zero.m1.abs() < 1e-15 && zero.m2.abs() < 1e-15 && zero.m3.abs() < 1e-15);
        let d21 = obs1_moments(&dicke(2, 1).unwrap().density()).unwrap();
        assert!((d21.m1 - 1.0 / 3.0).abs() < 1e-14);
        assert!((d21.m2 - 7.0 / 15.0).abs() < 1e-14);
        assert!((d21.m3 - 9.0 / 35.0).abs() < 1e-14);
        let g = obs1_moments(&ghz(3).unwrap().density()).unwrap();
        assert!((g.m1 - 1.0 / 3.0).abs() < 1e-14);
        assert!((g.m2 - 1.0 / 5.0).abs() < 1e-14);
        assert!((g.m3 - 1.0 / 7.0).abs() < 1e-14);
        let not_sym = singlet_state(2, 1, 0).unwrap();
        assert!(matches!(
            obs1_moments(&not_sym),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn obs1_moments_match_mc() {
        let mut rng = stream_rng(14, 0);
        let rho = random::symmetric_state(4, 2, &mut rng);
        let cf = obs1_moments(&rho).unwrap();
        let spec = MomentSpec::obs1(4, 1).unwrap();
        let mc = moments_mc(&rho, &spec, 3, 20_000, 15, SamplingMode::Direction, SEQ).unwrap();
        for (e, want) in mc.iter().zip([cf.m1, cf.m2, cf.m3]) {
            assert!(
                (e.mean - want).abs() <= 4.0 * e.std_error,
                "{e:?} vs {want}"
            );
        }
    }

    #[test]
    fn moment_json_shape() {
        let rho = dicke(2, 1).unwrap().density();
        let e = moment_mc(
            &rho,
            &MomentSpec::obs2(1).unwrap(),
            10,
            1,
            SamplingMode::Direction,
            SEQ,
        )
        .unwrap();
        let v = serde_json::to_value(&e).unwrap();
        for key in ["mean", "std_error", "samples", "mode", "spec", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["mode"], "direction");
        assert_eq!(v["spec"]["r"], 1);
    }
}
