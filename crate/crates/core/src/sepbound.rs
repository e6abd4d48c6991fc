//! Numerical separability bounds for 𝒯 = ⟨O_A⟩.
//!
//! On product states the ε-sum collapses to Σ_{i<j<k} v_i·(v_j × v_k), which
//! is maximized by multi-start projected gradient ascent on the product of
//! Bloch spheres. The three-qubit biseparable bound uses Nelder–Mead over a
//! pure two-qubit factor in Schmidt form times a pure single-qubit factor.

use argmin::core::{CostFunction, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_rng, Execution};
use crate::linalg::pauli;
use crate::states::{qubit_from_bloch, random, BlochVectorSet};

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 8;
pub const STEP_INIT: f64 = 0.1;
pub const ARMIJO_C: f64 = 1e-4;
pub const BACKTRACK: f64 = 0.5;
pub const MAX_ITERS: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const BISEP_BOUND: f64 = 2.0;

type Vec3 = [f64; 3];

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        return Err(Error::OutOfRange(format!("𝒯 needs N >= {MIN_N}, got {n}")));
    }
    Ok(())
}

/// N² cot(π/N) / (3√3).
pub fn conjectured_bound(n: usize) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    Ok(nf * nf / (std::f64::consts::PI / nf).tan() / (3.0 * 3f64.sqrt()))
}

/// Σ_{i<j<k} v_i · (v_j × v_k).
pub fn triple_sum(vs: &[Vec3]) -> f64 {
    let n = vs.len();
    let mut acc = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let c = cross(vs[j], vs[k]);
            acc += vs[..j].iter().map(|&vi| dot(vi, c)).sum::<f64>();
        }
    }
    acc
}

/// ∂/∂v_i of [`triple_sum`], treating the vectors as unconstrained.
pub fn triple_sum_gradient(vs: &[Vec3]) -> Vec<Vec3> {
    let n = vs.len();
    let mut g = vec![[0.0; 3]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let terms = [
                    (i, cross(vs[j], vs[k])),
                    (j, cross(vs[k], vs[i])),
                    (k, cross(vs[i], vs[j])),
                ];
                for (p, c) in terms {
                    for a in 0..3 {
                        g[p][a] += c[a];
                    }
                }
            }
        }
    }
    g
}

/// Gradient projected onto the tangent spaces of the spheres.
pub fn tangential_gradient(vs: &[Vec3]) -> Vec<Vec3> {
    triple_sum_gradient(vs)
        .into_iter()
        .zip(vs)
        .map(|(g, &v)| {
            let r = dot(g, v);
            [g[0] - r * v[0], g[1] - r * v[1], g[2] - r * v[2]]
        })
        .collect()
}

fn norm_all(g: &[Vec3]) -> f64 {
    g.iter().map(|v| dot(*v, *v)).sum::<f64>().sqrt()
}

/// 𝒯 of the product state with the given Bloch vectors.
pub fn t_product_value(bloch: &BlochVectorSet) -> Result<f64> {
    check_n(bloch.len())?;
    Ok(triple_sum(&bloch.vectors()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub n: usize,
    pub best_value: f64,
    pub conjectured: f64,
    /// conjectured − best_value.
    pub gap: f64,
    /// (θ, φ) per qubit of the best product state.
    pub angles: Vec<[f64; 2]>,
    pub restarts: usize,
    pub converged_fraction: f64,
    pub best_restart: usize,
}

impl OptimizationResult {
    pub fn best_angles(&self) -> BlochVectorSet {
        BlochVectorSet::new(self.angles.iter().map(|a| (a[0], a[1])).collect())
    }
}

pub fn default_restarts(n: usize) -> usize {
    if n <= 5 {
        200
    } else {
        500
    }
}

/// One ascent from `start`; returns (final vectors, value, converged).
pub fn ascend(start: Vec<Vec3>, tol: f64) -> (Vec<Vec3>, f64, bool) {
    let mut vs = start;
    let mut f = triple_sum(&vs);
    let mut step = STEP_INIT;
    for _ in 0..MAX_ITERS {
        let g = tangential_gradient(&vs);
        let gn2 = norm_all(&g).powi(2);
        if gn2.sqrt() <= tol {
            return (vs, f, true);
        }
        let mut s = step;
        loop {
            let trial: Vec<Vec3> = vs
                .iter()
                .zip(&g)
                .map(|(v, d)| {
                    let w = [v[0] + s * d[0], v[1] + s * d[1], v[2] + s * d[2]];
                    let n = dot(w, w).sqrt();
                    [w[0] / n, w[1] / n, w[2] / n]
                })
                .collect();
            let ft = triple_sum(&trial);
            if ft >= f + ARMIJO_C * s * gn2 {
                vs = trial;
                f = ft;
                step = (2.0 * s).min(1e3);
                break;
            }
            s *= BACKTRACK;
            if s < 1e-14 {
                // no ascent step left; a stationary point up to rounding
                let converged = gn2.sqrt() <= tol.max(1e-7);
                return (vs, f, converged);
            }
        }
    }
    let converged = norm_all(&tangential_gradient(&vs)) <= tol;
    (vs, f, converged)
}

/// Multi-start maximization of 𝒯 over N-qubit product states.
pub fn optimize_fully_sep_bound(
    n: usize,
    restarts: usize,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> Result<OptimizationResult> {
    if !(MIN_N..=MAX_N).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "bound optimizer needs {MIN_N} <= N <= {MAX_N}, got {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::OutOfRange("restarts must be at least 1".into()));
    }
    let runs = map_indexed(restarts, exec, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let start: Vec<Vec3> = (0..n).map(|_| random::unit_vector(&mut rng)).collect();
        ascend(start, tol)
    });
    let converged = runs.iter().filter(|r| r.2).count();
    if converged == 0 {
        return Err(Error::NoConvergence(format!(
            "none of {restarts} restarts reached tangential gradient <= {tol:e}"
        )));
    }
    // strict comparison in index order: ties go to the smaller restart index
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = r;
        }
    }
    let conjectured = conjectured_bound(n)?;
    let best_value = runs[best].1;
    let angles = runs[best]
        .0
        .iter()
        .map(|&v| {
            let (t, p) = BlochVectorSet::angles_of(v);
            [t, p]
        })
        .collect();
    Ok(OptimizationResult {
        n,
        best_value,
        conjectured,
        gap: conjectured - best_value,
        angles,
        restarts,
        converged_fraction: converged as f64 / restarts as f64,
        best_restart: best,
    })
}

/// The three ways of cutting three qubits into a pair and a single qubit;
/// the value is the position of the single qubit.
pub const CUTS: [usize; 3] = [2, 1, 0];

/// Pure two-qubit state cos ω |a₀b₀⟩ + e^{iχ} sin ω |a₁b₁⟩ and single-qubit
/// Bloch vector from 8 angles (ω, θa, φa, θb, φb, χ, θ, φ).
fn bisep_parts(params: &[f64]) -> ([C64; 4], Vec3) {
    let [omega, ta, pa, tb, pb, chi, t, p] = params[..8].try_into().expect("8 angles");
    let a = BlochVectorSet::vector(ta, pa);
    let b = BlochVectorSet::vector(tb, pb);
    let a0 = qubit_from_bloch(a);
    let a1 = qubit_from_bloch([-a[0], -a[1], -a[2]]);
    let b0 = qubit_from_bloch(b);
    let b1 = qubit_from_bloch([-b[0], -b[1], -b[2]]);
    let (c, s) = (omega.cos(), omega.sin());
    let phase = C64::from_polar(s, chi);
    let mut psi = [C64::new(0.0, 0.0); 4];
    for x in 0..2 {
        for y in 0..2 {
            psi[2 * x + y] = a0[x] * b0[y] * c + a1[x] * b1[y] * phase;
        }
    }
    (psi, BlochVectorSet::vector(t, p))
}

/// ⟨O_A⟩ on |ψ_XY⟩ ⊗ |φ_Z⟩ with the single qubit at position `single`.
pub fn bisep_objective(single: usize, params: &[f64]) -> f64 {
    let (psi, s) = bisep_parts(params);
    let sigma = pauli::xyz();
    let mut corr = [[0.0; 3]; 3];
    for (l, sl) in sigma.iter().enumerate() {
        for (m, sm) in sigma.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    let op = sl[(i >> 1, j >> 1)] * sm[(i & 1, j & 1)];
                    acc += psi[i].conj() * op * psi[j];
                }
            }
            corr[l][m] = acc.re;
        }
    }
    let mut value = 0.0;
    for l in 0..3 {
        for m in 0..3 {
            for k in 0..3 {
                let eps = match single {
                    0 => pauli::levi_civita(k, l, m),
                    1 => pauli::levi_civita(l, k, m),
                    _ => pauli::levi_civita(l, m, k),
                };
                value += eps * corr[l][m] * s[k];
            }
        }
    }
    value
}

struct BisepCost {
    single: usize,
}

impl CostFunction for BisepCost {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(-bisep_objective(self.single, p).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisepResult {
    pub best_value: f64,
    pub bound: f64,
    /// bound − best_value.
    pub gap: f64,
    /// Position of the single qubit in the best cut.
    pub single: usize,
    /// (ω, θa, φa, θb, φb, χ, θ, φ).
    pub params: Vec<f64>,
    pub restarts: usize,
    pub converged_fraction: f64,
    pub best_restart: usize,
}

pub const BISEP_MAX_ITERS: u64 = 4000;

/// Nelder–Mead from `start`; returns (params, |⟨O_A⟩|, converged).
pub fn bisep_nelder_mead(single: usize, start: &[f64], tol: f64) -> Result<(Vec<f64>, f64, bool)> {
    let simplex: Vec<Vec<f64>> = std::iter::once(start.to_vec())
        .chain((0..start.len()).map(|k| {
            let mut v = start.to_vec();
            v[k] += 0.3;
            v
        }))
        .collect();
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(tol)
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    let res = Executor::new(BisepCost { single }, solver)
        .configure(|s| s.max_iters(BISEP_MAX_ITERS))
        .run()
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    let state = res.state();
    let params = state
        .get_best_param()
        .cloned()
        .ok_or_else(|| Error::NoConvergence("Nelder–Mead returned no parameters".into()))?;
    let converged = matches!(
        state.get_termination_reason(),
        Some(TerminationReason::SolverConverged)
    );
    let value = bisep_objective(single, &params).abs();
    Ok((params, value, converged))
}

/// Maximizes |⟨O_A⟩| over pure biseparable three-qubit states.
pub fn optimize_bisep_bound_3q(
    restarts: usize,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> Result<BisepResult> {
    if restarts == 0 {
        return Err(Error::OutOfRange("restarts must be at least 1".into()));
    }
    let runs = map_indexed(restarts, exec, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let single = CUTS[r % 3];
        let start: Vec<f64> = (0..8)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        bisep_nelder_mead(single, &start, tol).map(|(p, v, c)| (single, p, v, c))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let converged = runs.iter().filter(|r| r.3).count();
    if converged == 0 {
        return Err(Error::NoConvergence(format!(
            "none of {restarts} Nelder–Mead restarts converged"
        )));
    }
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.2 > runs[best].2 {
            best = r;
        }
    }
    let (single, params, best_value, _) = runs[best].clone();
    Ok(BisepResult {
        best_value,
        bound: BISEP_BOUND,
        gap: BISEP_BOUND - best_value,
        single,
        params,
        restarts,
        converged_fraction: converged as f64 / restarts as f64,
        best_restart: best,
    })
}
