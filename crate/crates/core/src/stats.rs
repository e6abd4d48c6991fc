//! Finite-shot statistics: shot simulation, the unbiased estimator of
//! 3 Var(J_u), its variance, and Chebyshev–Cantelli measurement budgets.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collective::check_direction;
use crate::criteria::p_star;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, stream_rng, Execution};
use crate::moments::{jz_distribution, random_direction, unitary_for_axis};
use crate::states::{depolarize, singlet_state, DensityMatrix};

/// K outcomes of J_u for one measurement setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotBatch {
    pub n: usize,
    pub direction: [f64; 3],
    pub outcomes: Vec<f64>,
}

/// Distribution of J_u over its eigenvalues (N − 2k)/2, indexed by k.
pub fn ju_distribution(rho: &DensityMatrix, direction: [f64; 3]) -> Result<Vec<f64>> {
    check_direction(direction)?;
    if rho.local_dim() != 2 {
        return Err(Error::OutOfRange("shot simulation needs qubits".into()));
    }
    let v = unitary_for_axis(direction);
    let rotated = rho.rotate_collective(&v.adjoint());
    Ok(jz_distribution(&rotated)
        .into_iter()
        .map(|p| p.max(0.0))
        .collect())
}

/// Raw moments ⟨J_u^k⟩ for k = 0..=4.
pub fn ju_moments(rho: &DensityMatrix, direction: [f64; 3]) -> Result<[f64; 5]> {
    let dist = ju_distribution(rho, direction)?;
    let n = rho.n_parties() as f64;
    let mut out = [0.0; 5];
    for (k, p) in dist.iter().enumerate() {
        let m = (n - 2.0 * k as f64) / 2.0;
        for (r, o) in out.iter_mut().enumerate() {
            *o += p * m.powi(r as i32);
        }
    }
    Ok(out)
}

fn draw_outcomes(dist: &[f64], n: usize, k: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let w = WeightedIndex::new(dist)
        .map_err(|e| Error::OutOfRange(format!("invalid outcome distribution: {e}")))?;
    Ok((0..k)
        .map(|_| (n as f64 - 2.0 * w.sample(rng) as f64) / 2.0)
        .collect())
}

pub fn simulate_shots(
    rho: &DensityMatrix,
    direction: [f64; 3],
    k: usize,
    seed: u64,
) -> Result<ShotBatch> {
    if k == 0 {
        return Err(Error::OutOfRange("need at least one shot".into()));
    }
    let dist = ju_distribution(rho, direction)?;
    let mut rng = stream_rng(seed, 0);
    Ok(ShotBatch {
        n: rho.n_parties(),
        direction,
        outcomes: draw_outcomes(&dist, rho.n_parties(), k, &mut rng)?,
    })
}

/// 3 × the Bessel-corrected sample variance of the outcomes.
pub fn unbiased_f1(batch: &ShotBatch) -> Result<f64> {
    unbiased_f1_of(&batch.outcomes)
}

fn unbiased_f1_of(xs: &[f64]) -> Result<f64> {
    let k = xs.len();
    if k < 2 {
        return Err(Error::TooFewShots(k));
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(3.0 * ss / (k - 1) as f64)
}

fn check_k(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::TooFewShots(k));
    }
    Ok(k as f64)
}

/// (c1, …, c5) of 𝔼[(f̃₁)²].
pub fn c_coeffs(k: usize) -> Result<[f64; 5]> {
    let kf = check_k(k)?;
    let kk = kf * (kf - 1.0);
    Ok([
        1.0 / kf,
        -4.0 / kf,
        ((kf - 1.0).powi(2) + 2.0) / kk,
        -2.0 * (kf - 2.0) * (kf - 3.0) / kk,
        (kf - 2.0) * (kf - 3.0) / kk,
    ])
}

/// 9 {c1⟨J⁴⟩ + c2⟨J³⟩⟨J⟩ + c3⟨J²⟩² + c4⟨J²⟩⟨J⟩² + c5⟨J⟩⁴} along u.
pub fn expected_f1_squared(rho: &DensityMatrix, direction: [f64; 3], k: usize) -> Result<f64> {
    let c = c_coeffs(k)?;
    let m = ju_moments(rho, direction)?;
    Ok(9.0
        * (c[0] * m[4]
            + c[1] * m[3] * m[1]
            + c[2] * m[2] * m[2]
            + c[3] * m[2] * m[1] * m[1]
            + c[4] * m[1].powi(4)))
}

/// Var of the M-setting estimate of 𝒥^(1) for the noisy singlet ρ_p.
pub fn estimator_variance_rho_p(n: usize, p: f64, k: usize, m: usize) -> Result<f64> {
    let kf = check_k(k)?;
    if m == 0 {
        return Err(Error::OutOfRange("need at least one setting".into()));
    }
    let nf = n as f64;
    let bracket = 3.0 * nf * (p - 1.0) + 2.0 - kf * (nf * (p - 3.0) + 2.0);
    Ok(9.0 * nf * p * bracket / (16.0 * (kf - 1.0) * kf * m as f64))
}

/// One-sided Chebyshev–Cantelli confidence δ²/(Var + δ²).
pub fn cantelli_confidence(variance: f64, delta: f64) -> f64 {
    delta * delta / (variance + delta * delta)
}

/// δ such that the Cantelli confidence equals γ.
pub fn cantelli_delta(variance: f64, gamma_cl: f64) -> f64 {
    (gamma_cl / (1.0 - gamma_cl) * variance).sqrt()
}

/// N/2 − 3Np/4: distance of 𝒥^(1)(ρ_p) from the separable bound.
pub fn delta_for_p(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    nf / 2.0 - 3.0 * nf * p / 4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBudget {
    pub n: usize,
    pub gamma_cl: f64,
    pub p: Option<f64>,
    pub k: usize,
    pub m: u64,
    pub m_tot: u64,
    pub delta_error: f64,
    /// M before rounding up.
    pub m_continuous: f64,
}

impl MeasurementBudget {
    pub const CSV_HEADER: &'static str = "K,M,M_tot,delta_error,gamma_cl,N,p";

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let p = self.p.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.k, self.m, self.m_tot, self.delta_error, self.gamma_cl, self.n, p
        )
    }
}

/// M = ⌈9γN[K(N−1)+1] / (8(1−γ)(K−1)K δ²)⌉ (worst case p = 1).
pub fn budget(n: usize, gamma_cl: f64, k: usize, delta_error: f64) -> Result<MeasurementBudget> {
    let kf = check_k(k)?;
    if !(gamma_cl > 0.0 && gamma_cl < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence must be in (0, 1), got {gamma_cl}"
        )));
    }
    if !(delta_error > 0.0) {
        return Err(Error::OutOfRange(format!(
            "error must be positive, got {delta_error}"
        )));
    }
    if n == 0 {
        return Err(Error::OutOfRange("N must be at least 1".into()));
    }
    let nf = n as f64;
    let m_continuous = 9.0 * gamma_cl * nf * (kf * (nf - 1.0) + 1.0)
        / (8.0 * (1.0 - gamma_cl) * (kf - 1.0) * kf * delta_error * delta_error);
    // guard against 85.000000001-style rounding noise pushing M up by one
    let m = ((m_continuous * (1.0 - 1e-12)).ceil() as u64).max(1);
    Ok(MeasurementBudget {
        n,
        gamma_cl,
        p: None,
        k,
        m,
        m_tot: m * k as u64,
        delta_error,
        m_continuous,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetCurve {
    pub rows: Vec<MeasurementBudget>,
    /// K with the smallest M_tot (smallest K on ties).
    pub argmin_k: usize,
    /// lim_{K→∞} M·K = 9γN(N−1)/(8(1−γ)δ²).
    pub asymptote: f64,
}

pub fn budget_curve(
    n: usize,
    gamma_cl: f64,
    p: f64,
    k_min: usize,
    k_max: usize,
) -> Result<BudgetCurve> {
    if !(0.0..2.0 / 3.0).contains(&p) {
        return Err(Error::OutOfRange(format!(
            "p must lie in [0, 2/3) for a violation to certify, got {p}"
        )));
    }
    if k_min < 2 || k_max < k_min {
        return Err(Error::OutOfRange(format!(
            "invalid K range {k_min}..={k_max}"
        )));
    }
    let delta = delta_for_p(n, p);
    let rows = (k_min..=k_max)
        .map(|k| {
            budget(n, gamma_cl, k, delta).map(|mut b| {
                b.p = Some(p);
                b
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin_k = rows
        .iter()
        .min_by_key(|b| (b.m_tot, b.k))
        .map(|b| b.k)
        .expect("nonempty range");
    let nf = n as f64;
    let asymptote = 9.0 * gamma_cl * nf * (nf - 1.0) / (8.0 * (1.0 - gamma_cl) * delta * delta);
    Ok(BudgetCurve {
        rows,
        argmin_k,
        asymptote,
    })
}

pub fn write_budget_csv(rows: &[MeasurementBudget], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", MeasurementBudget::CSV_HEADER)?;
    for r in rows {
        r.write_csv(out)?;
    }
    Ok(())
}

/// `N,p_star` rows for N = 1..=n_max.
pub fn write_pstar_csv(n_max: usize, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "N,p_star")?;
    for n in 1..=n_max {
        writeln!(out, "{},{}", n, p_star(n))?;
    }
    Ok(())
}

/// ρ_p = (1 − p) ρ_singlet + p 1/2^N with a single singlet pairing.
pub fn noisy_singlet(n: usize, p: f64, seed: u64) -> Result<DensityMatrix> {
    depolarize(&singlet_state(n, 1, seed)?, p)
}

/// The M-setting estimate of 𝒥^(1): mean of f̃₁ over random directions.
pub fn estimate_j1(
    rho: &DensityMatrix,
    settings: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    check_k(k)?;
    let n = rho.n_parties();
    let values = (0..settings)
        .map(|_| {
            let dist = ju_distribution(rho, random_direction(rng))?;
            unbiased_f1_of(&draw_outcomes(&dist, n, k, rng)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&values) / settings as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub budget: MeasurementBudget,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub alpha: f64,
}

/// Runs the budgeted pipeline `trials` times on ρ_p and counts the runs
/// whose estimate fails to certify 𝒥^(1) < N/2.
pub fn coverage_simulation(
    n: usize,
    p: f64,
    gamma_cl: f64,
    k: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<CoverageReport> {
    let rho = noisy_singlet(n, p, seed)?;
    let mut b = budget(n, gamma_cl, k, delta_for_p(n, p))?;
    b.p = Some(p);
    let settings = b.m as usize;
    let bound = n as f64 / 2.0;
    let outcomes = map_indexed(trials, exec, |t| {
        let mut rng = stream_rng(seed, t as u64 + 1);
        estimate_j1(&rho, settings, k, &mut rng).map(|e| e >= bound)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let failures = outcomes.iter().filter(|&&f| f).count();
    Ok(CoverageReport {
        budget: b,
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        alpha: 1.0 - gamma_cl,
    })
}
