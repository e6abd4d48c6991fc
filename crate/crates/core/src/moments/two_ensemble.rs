//! Moments for two spatially separated ensembles A and B of N qubits each.

use serde::{Deserialize, Serialize};

use super::{check_qubits, random_direction, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::exec::{mean_and_std_error, sample_chunked, stream_seed, Execution};
use crate::linalg::{local_product_trace, pauli};
use crate::states::{is_permutation_invariant, DensityMatrix, MAX_QUBITS};

pub const AGREEMENT_TOL: f64 = 1e-9;

/// Correlations between ensembles A = parties 0..N and B = parties N..2N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelation {
    pub n: usize,
    /// Covariance of the cross pair (A₁, B₁).
    pub covariance: CovarianceMatrix,
    /// ⟨J_{l,A}⟩ and ⟨J_{l,B}⟩.
    pub mean_a: [f64; 3],
    pub mean_b: [f64; 3],
    /// Var(J_{p,A} + J_{q,B}) − Var(J_{p,A} − J_{q,B}).
    pub eta: [[f64; 3]; 3],
}

fn check_two_ensemble(rho: &DensityMatrix, n: usize) -> Result<()> {
    check_qubits(rho)?;
    if n == 0 || 2 * n > MAX_QUBITS {
        return Err(Error::OutOfRange(format!(
            "two ensembles need 1 <= 2N <= {MAX_QUBITS}, got N = {n}"
        )));
    }
    if rho.n_parties() != 2 * n {
        return Err(Error::ShapeMismatch(format!(
            "state has {} qubits, expected 2N = {}",
            rho.n_parties(),
            2 * n
        )));
    }
    Ok(())
}

impl CrossCorrelation {
    pub fn of(rho: &DensityMatrix, n: usize) -> Result<Self> {
        check_two_ensemble(rho, n)?;
        let a_parties: Vec<usize> = (0..n).collect();
        let b_parties: Vec<usize> = (n..2 * n).collect();
        for (name, parties) in [("A", &a_parties), ("B", &b_parties)] {
            if !is_permutation_invariant(&rho.reduce(parties)?) {
                return Err(Error::NotSymmetric(format!(
                    "reduced state of ensemble {name} is not permutation invariant"
                )));
            }
        }
        let covariance = CovarianceMatrix::from_pair(rho, 0, n)?;
        for (p, q) in [(n - 1, 2 * n - 1), (0, 2 * n - 1), (n - 1, n)] {
            let other = CovarianceMatrix::from_pair(rho, p, q)?;
            let diff = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| (other.entries[i][j] - covariance.entries[i][j]).abs())
                .fold(0.0, f64::max);
            if diff > AGREEMENT_TOL {
                return Err(Error::NotSymmetric(format!(
                    "cross pairs (0,{n}) and ({p},{q}) differ by {diff:e}"
                )));
            }
        }

        let s = rho.structure();
        let m = rho.matrix();
        let sigma = pauli::xyz();
        let one = |k: usize, a: usize| local_product_trace(m, s, &[(k, &sigma[a])]).re;
        let two = |k: usize, a: usize, l: usize, b: usize| {
            local_product_trace(m, s, &[(k, &sigma[a]), (l, &sigma[b])]).re
        };
        let mut mean_a = [0.0; 3];
        let mut mean_b = [0.0; 3];
        // ⟨J_{p,X}²⟩ for X = A, B
        let mut sq_a = [0.0; 3];
        let mut sq_b = [0.0; 3];
        for p in 0..3 {
            mean_a[p] = 0.5 * a_parties.iter().map(|&k| one(k, p)).sum::<f64>();
            mean_b[p] = 0.5 * b_parties.iter().map(|&k| one(k, p)).sum::<f64>();
            for (parties, out) in [(&a_parties, &mut sq_a), (&b_parties, &mut sq_b)] {
                let mut acc = parties.len() as f64;
                for (x, &k) in parties.iter().enumerate() {
                    for &l in &parties[x + 1..] {
                        acc += 2.0 * two(k, p, l, p);
                    }
                }
                out[p] = 0.25 * acc;
            }
        }
        let mut eta = [[0.0; 3]; 3];
        for p in 0..3 {
            for q in 0..3 {
                let cross: f64 = a_parties
                    .iter()
                    .flat_map(|&k| b_parties.iter().map(move |&l| (k, l)))
                    .map(|(k, l)| two(k, p, l, q))
                    .sum::<f64>()
                    * 0.25;
                let var = |sign: f64| {
                    let mean = mean_a[p] + sign * mean_b[q];
                    sq_a[p] + sq_b[q] + 2.0 * sign * cross - mean * mean
                };
                eta[p][q] = var(1.0) - var(-1.0);
            }
        }
        Ok(Self {
            n,
            covariance,
            mean_a,
            mean_b,
            eta,
        })
    }

    /// Cov(J_{p,A}, J_{q,B}) = η_pq / 4.
    pub fn spin_covariance(&self) -> [[f64; 3]; 3] {
        self.eta.map(|row| row.map(|x| x / 4.0))
    }
}

/// Left-hand side of the two-ensemble criterion in its two equivalent forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoEnsembleLhs {
    /// Σ C_pq² + |a|² + |b|² − |a|²|b|².
    pub value: f64,
    /// Σ η_pq²/N⁴ + 𝒥_A + 𝒥_B − 𝒥_A 𝒥_B with 𝒥_X = (4/N²)|⟨J_X⟩|².
    pub eta_form: f64,
    /// 𝒢^(2) = Σ C_pq².
    pub g2: f64,
    pub j_a: f64,
    pub j_b: f64,
    pub correlation: CrossCorrelation,
}

pub fn two_ensemble_lhs(rho: &DensityMatrix, n: usize) -> Result<TwoEnsembleLhs> {
    let correlation = CrossCorrelation::of(rho, n)?;
    let c = &correlation.covariance;
    let norm_sq = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>();
    let (a2, b2) = (norm_sq(&c.a), norm_sq(&c.b));
    let g2 = c.frobenius_sq();
    let value = g2 + a2 + b2 - a2 * b2;

    let n4 = (n as f64).powi(4);
    let scale = 4.0 / (n * n) as f64;
    let j_a = scale * norm_sq(&correlation.mean_a);
    let j_b = scale * norm_sq(&correlation.mean_b);
    let eta_g2: f64 = correlation.eta.iter().flatten().map(|e| e * e).sum::<f64>() / n4;
    let eta_form = eta_g2 + j_a + j_b - j_a * j_b;
    if (value - eta_form).abs() > AGREEMENT_TOL {
        return Err(Error::NotSymmetric(format!(
            "covariance form {value} and η form {eta_form} disagree"
        )));
    }
    Ok(TwoEnsembleLhs {
        value,
        eta_form,
        g2,
        j_a,
        j_b,
        correlation,
    })
}

/// Monte Carlo estimate of 𝒢^(2) + 𝒥_A + 𝒥_B − 𝒥_A 𝒥_B with independent
/// random axes for A and B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoEnsembleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub g2: (f64, f64),
    pub j_a: (f64, f64),
    pub j_b: (f64, f64),
    pub samples: usize,
    pub seed: u64,
}

pub fn two_ensemble_mc(
    rho: &DensityMatrix,
    n: usize,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<TwoEnsembleEstimate> {
    if samples < 2 {
        return Err(Error::OutOfRange(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let corr = CrossCorrelation::of(rho, n)?;
    let k = corr.spin_covariance();
    let nf = n as f64;
    let g = (3.0 / (nf * nf)).powi(2);
    let beta = 12.0 / (nf * nf);
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];

    let g_draws = sample_chunked(samples, stream_seed(seed, 0), exec, |rng| {
        let u = random_direction(rng);
        let v = random_direction(rng);
        let kv = [0, 1, 2].map(|p| dot(k[p], v));
        let eta = 4.0 * dot(u, kv);
        g * eta * eta
    });
    let a_draws = sample_chunked(samples, stream_seed(seed, 1), exec, |rng| {
        beta * dot(random_direction(rng), corr.mean_a).powi(2)
    });
    let b_draws = sample_chunked(samples, stream_seed(seed, 2), exec, |rng| {
        beta * dot(random_direction(rng), corr.mean_b).powi(2)
    });
    let g2 = mean_and_std_error(&g_draws);
    let j_a = mean_and_std_error(&a_draws);
    let j_b = mean_and_std_error(&b_draws);
    let value = g2.0 + j_a.0 + j_b.0 - j_a.0 * j_b.0;
    let std_error =
        (g2.1.powi(2) + ((1.0 - j_b.0) * j_a.1).powi(2) + ((1.0 - j_a.0) * j_b.1).powi(2)).sqrt();
    Ok(TwoEnsembleEstimate {
        value,
        std_error,
        g2,
        j_a,
        j_b,
        samples,
        seed,
    })
}
