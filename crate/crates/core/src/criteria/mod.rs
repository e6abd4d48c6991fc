//! Entanglement decision procedures built on collective moments.
//!
//! Every check returns a [`CriterionVerdict`]. The margin is the signed
//! distance past the separability bound, so `violated` is `margin > tol` for
//! lower and upper bounds alike.

mod lemma;
mod ppt;
mod scan;

pub use lemma::{lemma_bounds, singular_values, LemmaBounds};
pub use ppt::{bipartitions, ppt_classify, PptReport, PPT_TOL};
pub use scan::{lattice, scan_regions, write_scan_csv, Region, ScanRow, MAX_SCAN_QUBITS};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::moments::{d_closed_form, j1_closed_form, t_average, two_ensemble_lhs, MomentEstimate};
use crate::sepbound::conjectured_bound;
use crate::states::{DensityMatrix, MAX_QUBITS};

/// Default violation tolerance for closed-form inputs.
pub const DEFAULT_TOL: f64 = 1e-9;
/// z-score required to call a Monte Carlo violation statistically significant.
pub const Z_THRESHOLD: f64 = 5.0;
/// Biseparable bound of |𝒯| for three qubits.
pub const GME_BOUND_3Q: f64 = 2.0;
/// Smallest eigenvalue magnitude the obs1 inversion can resolve: near-degenerate
/// roots of a cubic move by ~√ε under rounding of its coefficients.
pub const ROOT_RESOLUTION: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionTag {
    Obs1,
    Obs2,
    Obs2Qudit,
    Obs3,
    Obs4,
    MultiEnsemble,
}

impl fmt::Display for CriterionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CriterionTag::Obs1 => "obs1",
            CriterionTag::Obs2 => "obs2",
            CriterionTag::Obs2Qudit => "obs2-qudit",
            CriterionTag::Obs3 => "obs3",
            CriterionTag::Obs4 => "obs4",
            CriterionTag::MultiEnsemble => "multi-ensemble",
        };
        f.write_str(s)
    }
}

impl FromStr for CriterionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "obs1" => Ok(CriterionTag::Obs1),
            "2" | "obs2" => Ok(CriterionTag::Obs2),
            "2q" | "obs2-qudit" | "qudit" => Ok(CriterionTag::Obs2Qudit),
            "3" | "obs3" => Ok(CriterionTag::Obs3),
            "4" | "obs4" => Ok(CriterionTag::Obs4),
            "m" | "multi-ensemble" => Ok(CriterionTag::MultiEnsemble),
            other => Err(Error::Parse(format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionTag,
    pub value: f64,
    pub bound: f64,
    pub violated: bool,
    pub margin: f64,
    pub diagnostics: BTreeMap<String, Value>,
}

impl CriterionVerdict {
    /// Verdict for a criterion whose separable states satisfy value <= bound.
    pub fn upper(criterion: CriterionTag, value: f64, bound: f64, tol: f64) -> Self {
        Self::with_margin(criterion, value, bound, value - bound, tol)
    }

    /// Verdict for a criterion whose separable states satisfy value >= bound.
    pub fn lower(criterion: CriterionTag, value: f64, bound: f64, tol: f64) -> Self {
        Self::with_margin(criterion, value, bound, bound - value, tol)
    }

    fn with_margin(criterion: CriterionTag, value: f64, bound: f64, margin: f64, tol: f64) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("tol".to_string(), json!(tol));
        Self {
            criterion,
            value,
            bound,
            violated: margin > tol,
            margin,
            diagnostics,
        }
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.diagnostics.insert(key.to_string(), v);
    }

    /// Adds the z-score of a Monte Carlo input and the statistical verdict.
    pub fn with_std_error(mut self, std_error: f64) -> Self {
        let z = if std_error > 0.0 {
            self.margin / std_error
        } else if self.margin > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        self.insert("std_error", std_error);
        self.insert(
            "z_score",
            if z.is_finite() {
                json!(z)
            } else {
                json!(z.to_string())
            },
        );
        self.insert("z_threshold", Z_THRESHOLD);
        self.insert("statistically_violated", self.violated && z >= Z_THRESHOLD);
        self
    }

    pub fn statistically_violated(&self) -> Option<bool> {
        self.diagnostics
            .get("statistically_violated")
            .and_then(Value::as_bool)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("verdict is serializable")
    }
}

/// Real roots (ascending) of λ³ − e1 λ² + e2 λ − e3 by the trigonometric method.
///
/// A positive discriminant beyond the slack `tol · scale⁶` is reported as
/// [`Error::ComplexRoots`]; smaller excursions are clamped onto the real axis.
pub fn cubic_real_roots(e1: f64, e2: f64, e3: f64, tol: f64) -> Result<[f64; 3]> {
    let (a, b, c) = (-e1, e2, -e3);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let scale = [1.0, e1.abs(), e2.abs().sqrt(), e3.abs().cbrt()]
        .into_iter()
        .fold(0.0, f64::max);
    if disc > 108.0 * tol.max(f64::EPSILON) * scale.powi(6) {
        return Err(Error::ComplexRoots(disc));
    }
    let shift = -a / 3.0;
    let mut roots = if p >= 0.0 {
        // only reachable with p ≈ q ≈ 0: a triple root
        [shift; 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        [0.0, 1.0, 2.0].map(|k| shift + r * (theta - 2.0 * std::f64::consts::PI * k / 3.0).cos())
    };
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Covariance traces (tr C, tr C², tr C³) from obs1 moments.
pub fn traces_from_moments(m1: f64, m2: f64, m3: f64) -> (f64, f64, f64) {
    let tr1 = 3.0 * m1;
    let tr2 = (15.0 * m2 - tr1 * tr1) / 2.0;
    let tr3 = (105.0 * m3 - tr1 * (tr1 * tr1 + 6.0 * tr2)) / 8.0;
    (tr1, tr2, tr3)
}

/// Spin-squeezing entanglement from (𝒥^(1), 𝒥^(2), 𝒥^(3)) of the obs1 preset:
/// entangled iff the smallest eigenvalue of the pair covariance is below −tol.
pub fn obs1_decide(m1: f64, m2: f64, m3: f64, tol: f64) -> Result<CriterionVerdict> {
    let (tr1, tr2, tr3) = traces_from_moments(m1, m2, m3);
    let e1 = tr1;
    let e2 = 0.5 * (tr1 * tr1 - tr2);
    let e3 = (tr1 * tr1 * tr1 - 3.0 * tr1 * tr2 + 2.0 * tr3) / 6.0;
    let roots = cubic_real_roots(e1, e2, e3, tol)?;
    let mut v =
        CriterionVerdict::lower(CriterionTag::Obs1, roots[0], 0.0, tol.max(ROOT_RESOLUTION));
    v.insert("requested_tol", tol);
    v.insert("eigenvalues", roots);
    v.insert("moments", [m1, m2, m3]);
    v.insert("traces", [tr1, tr2, tr3]);
    v.insert("char_poly", [e1, e2, e3]);
    Ok(v)
}

/// Collective variance criterion from a dense state: Σ_l Var(J_l) >= N/2 for fully separable states.
pub fn obs2_check(rho: &DensityMatrix, tol: f64) -> Result<CriterionVerdict> {
    let value = j1_closed_form(rho)?;
    Ok(obs2_from_value(value, rho.n_parties(), tol))
}

/// Collective variance criterion from an estimate of 𝒥^(1) with the (3, 0, 0) preset.
pub fn obs2_from_estimate(estimate: &MomentEstimate, n: usize, tol: f64) -> CriterionVerdict {
    let mut v = obs2_from_value(estimate.mean, n, tol).with_std_error(estimate.std_error);
    v.insert("samples", estimate.samples);
    v.insert("seed", estimate.seed);
    v
}

fn obs2_from_value(value: f64, n: usize, tol: f64) -> CriterionVerdict {
    let mut v = CriterionVerdict::lower(CriterionTag::Obs2, value, n as f64 / 2.0, tol);
    v.insert("n", n);
    v
}

/// Qudit version: Σ_l Var(Λ_l) >= N(d−1)/d.
pub fn obs2_qudit_check(rho: &DensityMatrix, tol: f64) -> Result<CriterionVerdict> {
    let d = rho.local_dim();
    let n = rho.n_parties();
    let value = d_closed_form(rho, d)?;
    let bound = (n * (d - 1)) as f64 / d as f64;
    let mut v = CriterionVerdict::lower(CriterionTag::Obs2Qudit, value, bound, tol);
    v.insert("n", n);
    v.insert("d", d);
    Ok(v)
}

/// Antisymmetric triple criterion: |𝒯| <= N² cot(π/N)/(3√3) for fully separable states; for N = 3
/// also |𝒯| <= 2 for biseparable states.
pub fn obs3_check(rho: &DensityMatrix, tol: f64) -> Result<CriterionVerdict> {
    let n = rho.n_parties();
    let t = t_average(rho)?;
    let bound = conjectured_bound(n)?;
    let mut v = CriterionVerdict::upper(CriterionTag::Obs3, t.abs(), bound, tol);
    v.insert("t", t);
    v.insert("n", n);
    if n == 3 {
        v.insert("gme_bound", GME_BOUND_3Q);
        v.insert("gme", t.abs() > GME_BOUND_3Q + tol);
    }
    Ok(v)
}

/// Two-ensemble criterion for ensembles A = parties 0..N and B = N..2N.
pub fn obs4_check(rho: &DensityMatrix, n: usize, tol: f64) -> Result<CriterionVerdict> {
    let lhs = two_ensemble_lhs(rho, n)?;
    let mut v = CriterionVerdict::upper(CriterionTag::Obs4, lhs.value, 1.0, tol);
    v.insert("n", n);
    v.insert("eta_form", lhs.eta_form);
    v.insert("g2", lhs.g2);
    v.insert("j_a", lhs.j_a);
    v.insert("j_b", lhs.j_b);
    v.insert("covariance", lhs.correlation.covariance.entries);
    v.insert("eta", lhs.correlation.eta);
    Ok(v)
}

/// Average of the two-ensemble left-hand side over all pairs of m ensembles
/// of N qubits each.
pub fn multi_ensemble_check(
    rho: &DensityMatrix,
    m: usize,
    n: usize,
    tol: f64,
) -> Result<CriterionVerdict> {
    if m < 2 || n == 0 || m * n > MAX_QUBITS {
        return Err(Error::OutOfRange(format!(
            "multi-ensemble check needs m >= 2, N >= 1 and m·N <= {MAX_QUBITS}, got m = {m}, N = {n}"
        )));
    }
    if rho.n_parties() != m * n {
        return Err(Error::ShapeMismatch(format!(
            "state has {} parties, expected m·N = {}",
            rho.n_parties(),
            m * n
        )));
    }
    let mut pairs = Vec::new();
    let mut sum = 0.0;
    for x in 0..m {
        for y in (x + 1)..m {
            let keep: Vec<usize> = (x * n..(x + 1) * n).chain(y * n..(y + 1) * n).collect();
            let lhs = two_ensemble_lhs(&rho.reduce(&keep)?, n)?.value;
            sum += lhs;
            pairs.push(json!({"x": x, "y": y, "value": lhs}));
        }
    }
    let value = 2.0 * sum / (m * (m - 1)) as f64;
    let mut v = CriterionVerdict::upper(CriterionTag::MultiEnsemble, value, 1.0, tol);
    v.insert("m", m);
    v.insert("n", n);
    v.insert("pairs", pairs);
    Ok(v)
}

/// Published closed form for the depolarized Dicke split and its critical point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DickeTwoEnsemble {
    pub n: usize,
    pub p: f64,
    pub value: f64,
    pub p_star: f64,
}

/// (6N⁴ − 2N³ + 1) p² / ((1 − 2N)² N²) and p*(N) = N(2N − 1)/√(6N⁴ − 2N³ + 1).
pub fn dicke_two_ensemble_analytic(n: usize, p: f64) -> Result<DickeTwoEnsemble> {
    if n == 0 {
        return Err(Error::OutOfRange("N must be at least 1".into()));
    }
    let nf = n as f64;
    let poly = 6.0 * nf.powi(4) - 2.0 * nf.powi(3) + 1.0;
    let value = poly * p * p / ((1.0 - 2.0 * nf).powi(2) * nf * nf);
    Ok(DickeTwoEnsemble {
        n,
        p,
        value,
        p_star: p_star(n),
    })
}

pub fn p_star(n: usize) -> f64 {
    let nf = n as f64;
    nf * (2.0 * nf - 1.0) / (6.0 * nf.powi(4) - 2.0 * nf.powi(3) + 1.0).sqrt()
}
