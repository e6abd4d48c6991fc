//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use spinmoments::collective::SpinMoments;
use spinmoments::criteria::{
    self, multi_ensemble_check, obs1_decide, obs2_check, obs2_from_estimate, obs2_qudit_check,
    obs3_check, obs4_check, scan_regions, write_scan_csv, CriterionTag, CriterionVerdict,
};
use spinmoments::io::{
    provenance, read_state, sidecar_path, to_pretty, with_provenance, StateFile,
};
use spinmoments::moments::{
    d_mc, design_quadrature_moment, j1_closed_form, moment_mc, moments_mc, obs1_moments, t_mc,
    two_ensemble_mc, MomentSpec, SamplingMode, SphericalDesign,
};
use spinmoments::sepbound::{default_restarts, optimize_bisep_bound_3q, optimize_fully_sep_bound};
use spinmoments::states::{
    depolarize, dicke, ghz, mixed_family, phased_dicke, product_state, singlet_state,
    BlochVectorSet, PureState,
};
use spinmoments::stats::{budget_curve, write_budget_csv, write_pstar_csv};
use spinmoments::{Error, Execution};

#[derive(Debug)]
pub enum CliError {
    /// Invalid input: exit code 2.
    Input(String),
    /// Computation or output failure: exit code 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_invalid_input() {
            CliError::Input(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("write failed: {e}"))
    }
}

type CliResult = Result<(), CliError>;

const EXEC: Execution = Execution::Parallel;

fn config(command: &str, threads: usize, args: &impl Serialize) -> Value {
    json!({"command": command, "threads": threads, "args": args})
}

fn emit_json(v: &Value, out: Option<&Path>) -> CliResult {
    let text = to_pretty(v);
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Writes CSV to `out` (with a provenance sidecar) or to stdout (provenance on stderr).
fn emit_csv(csv: &[u8], out: Option<&Path>, meta: &Value) -> CliResult {
    match out {
        Some(p) => {
            fs::write(p, csv)?;
            fs::write(sidecar_path(p), to_pretty(meta))?;
        }
        None => {
            std::io::stdout().write_all(csv)?;
            eprint!("{}", to_pretty(meta));
        }
    }
    Ok(())
}

fn require<T>(v: Option<T>, name: &str, family: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required for {family}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Dicke,
    PhasedDicke,
    Ghz,
    Singlet,
    MixedFamily,
    Product,
    Depolarized,
}

#[derive(Args, Debug, Serialize)]
pub struct StateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Number of qubits.
    #[arg(long)]
    pub n: usize,
    /// Excitations (dicke).
    #[arg(long)]
    pub m: Option<usize>,
    /// Weight of |ζ_N⟩ (mixed-family).
    #[arg(long)]
    pub x: Option<f64>,
    /// Weight of the flipped state (mixed-family).
    #[arg(long)]
    pub y: Option<f64>,
    /// Use the flipped phased Dicke state.
    #[arg(long)]
    pub flipped: bool,
    /// Number of random singlet matchings to mix.
    #[arg(long, default_value_t = 1)]
    pub pairings: usize,
    /// Product-state Bloch angles "theta,phi;theta,phi;..." (default: cone configuration).
    #[arg(long)]
    pub angles: Option<String>,
    /// Family to depolarize.
    #[arg(long, value_enum)]
    pub base: Option<Family>,
    /// Depolarizing weight λ in (1−λ)ρ + λ 1/d.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_angles(s: &str) -> Result<BlochVectorSet, CliError> {
    let angles = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [t, p] => match (t.parse::<f64>(), p.parse::<f64>()) {
                    (Ok(t), Ok(p)) => Ok((t, p)),
                    _ => Err(CliError::Input(format!("bad angle pair {pair:?}"))),
                },
                _ => Err(CliError::Input(format!("bad angle pair {pair:?}"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlochVectorSet::new(angles))
}

fn build_state(a: &StateArgs, family: Family) -> Result<StateFile, CliError> {
    let pure = |p: PureState| Ok(StateFile::Pure(p));
    match family {
        Family::Dicke => pure(dicke(a.n, require(a.m, "m", "dicke")?)?),
        Family::PhasedDicke => pure(phased_dicke(a.n, a.flipped)?),
        Family::Ghz => pure(ghz(a.n)?),
        Family::Singlet => Ok(StateFile::Density(singlet_state(a.n, a.pairings, a.seed)?)),
        Family::MixedFamily => {
            let x = require(a.x, "x", "mixed-family")?;
            let y = require(a.y, "y", "mixed-family")?;
            Ok(StateFile::Density(mixed_family(a.n, x, y)?))
        }
        Family::Product => {
            let set = match &a.angles {
                Some(s) => parse_angles(s)?,
                None => BlochVectorSet::cone_configuration(a.n),
            };
            if set.len() != a.n {
                return Err(CliError::Input(format!(
                    "{} angle pairs given for N = {}",
                    set.len(),
                    a.n
                )));
            }
            pure(product_state(&set)?)
        }
        Family::Depolarized => {
            let base = require(a.base, "base", "depolarized")?;
            if base == Family::Depolarized {
                return Err(CliError::Input(
                    "--base cannot itself be depolarized".into(),
                ));
            }
            let noise = require(a.noise, "noise", "depolarized")?;
            let rho = build_state(a, base)?.density();
            Ok(StateFile::Density(depolarize(&rho, noise)?))
        }
    }
}

pub fn state(a: StateArgs, threads: usize) -> CliResult {
    let s = build_state(&a, a.family)?;
    let v = with_provenance(s.to_json(), &config("state", threads, &a), Some(a.seed));
    emit_json(&v, a.out.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Obs1,
    Obs2,
    Obs4,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    Direction,
    Unitary,
    Analytic,
    Design,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignArg {
    Octahedron,
    Icosahedron,
}

#[derive(Args, Debug, Serialize)]
pub struct MomentArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value_t = Preset::Obs2)]
    pub preset: Preset,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Moment order r.
    #[arg(long, default_value_t = 1)]
    pub r: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MomentMode::Direction)]
    pub mode: MomentMode,
    #[arg(long, value_enum, default_value_t = DesignArg::Icosahedron)]
    pub design: DesignArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn moment_spec(a: &MomentArgs, n: usize) -> Result<MomentSpec, CliError> {
    Ok(match a.preset {
        Preset::Obs1 => MomentSpec::obs1(n, a.r)?,
        Preset::Obs2 => MomentSpec::obs2(a.r)?,
        Preset::Obs4 => MomentSpec::obs4(n, a.r)?,
        Preset::Custom => MomentSpec::new(
            require(a.alpha, "alpha", "custom")?,
            require(a.beta, "beta", "custom")?,
            require(a.gamma, "gamma", "custom")?,
            a.r,
        )?,
    })
}

fn analytic_moment(
    a: &MomentArgs,
    rho: &spinmoments::states::DensityMatrix,
) -> Result<f64, CliError> {
    let n = rho.n_parties();
    match (a.preset, a.r) {
        (Preset::Obs2, 1) => Ok(j1_closed_form(rho)?),
        (Preset::Obs1, 1..=3) => {
            let m = obs1_moments(rho)?;
            Ok([m.m1, m.m2, m.m3][a.r as usize - 1])
        }
        (Preset::Obs4, 1) => {
            let sm = SpinMoments::of(rho)?;
            let norm: f64 = sm.mean.iter().map(|x| x * x).sum();
            Ok(4.0 * norm / (n * n) as f64)
        }
        _ => Err(CliError::Input(format!(
            "no closed form for preset {:?} at order {}; use --mode design or a sampling mode",
            a.preset, a.r
        ))),
    }
}

pub fn moment(a: MomentArgs, threads: usize) -> CliResult {
    let rho = read_state(&a.state)?.density();
    let spec = moment_spec(&a, rho.n_parties())?;
    let result = match a.mode {
        MomentMode::Direction | MomentMode::Unitary => {
            let mode = if a.mode == MomentMode::Direction {
                SamplingMode::Direction
            } else {
                SamplingMode::Unitary
            };
            let e = moment_mc(&rho, &spec, a.samples, a.seed, mode, EXEC)?;
            json!({"method": "monte-carlo", "spec": spec, "estimate": e})
        }
        MomentMode::Analytic => {
            json!({"method": "analytic", "spec": spec, "value": analytic_moment(&a, &rho)?})
        }
        MomentMode::Design => {
            let design = match a.design {
                DesignArg::Octahedron => SphericalDesign::Octahedron,
                DesignArg::Icosahedron => SphericalDesign::Icosahedron,
            };
            let value = design_quadrature_moment(&rho, &spec, design)?;
            json!({"method": "design", "spec": spec, "value": value})
        }
    };
    let v = with_provenance(result, &config("moment", threads, &a), Some(a.seed));
    emit_json(&v, a.out.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionMode {
    Analytic,
    Mc,
}

#[derive(Args, Debug, Serialize)]
pub struct CriterionArgs {
    /// Criterion: 1, 2, 2q (qudit), 3, 4 or m (multi-ensemble).
    #[arg(long)]
    pub obs: String,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value_t = CriterionMode::Analytic)]
    pub mode: CriterionMode,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Violation tolerance (default 1e-9 analytic, 1e-2 for Monte Carlo obs1).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of ensembles for the multi-ensemble criterion.
    #[arg(long)]
    pub ensembles: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn even_split(n: usize, m: usize) -> Result<usize, CliError> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(CliError::Input(format!(
            "{n} parties cannot be split into {m} equal ensembles"
        )));
    }
    Ok(n / m)
}

pub fn criterion(mut a: CriterionArgs, threads: usize) -> CliResult {
    let tag: CriterionTag = a.obs.parse()?;
    let rho = read_state(&a.state)?.density();
    let n = rho.n_parties();
    let mc = a.mode == CriterionMode::Mc;
    let tol = *a.tol.get_or_insert(if mc && tag == CriterionTag::Obs1 {
        1e-2
    } else {
        criteria::DEFAULT_TOL
    });
    let verdict: CriterionVerdict = match (tag, mc) {
        (CriterionTag::Obs1, false) => {
            let m = obs1_moments(&rho)?;
            obs1_decide(m.m1, m.m2, m.m3, tol)?
        }
        (CriterionTag::Obs1, true) => {
            let spec = MomentSpec::obs1(n, 1)?;
            let est = moments_mc(
                &rho,
                &spec,
                3,
                a.samples,
                a.seed,
                SamplingMode::Direction,
                EXEC,
            )?;
            let mut v = obs1_decide(est[0].mean, est[1].mean, est[2].mean, tol)?;
            v.insert(
                "moment_std_errors",
                est.iter().map(|e| e.std_error).collect::<Vec<_>>(),
            );
            v.insert("samples", a.samples);
            v
        }
        (CriterionTag::Obs2, false) => obs2_check(&rho, tol)?,
        (CriterionTag::Obs2, true) => {
            let e = moment_mc(
                &rho,
                &MomentSpec::obs2(1)?,
                a.samples,
                a.seed,
                SamplingMode::Direction,
                EXEC,
            )?;
            obs2_from_estimate(&e, n, tol)
        }
        (CriterionTag::Obs2Qudit, false) => obs2_qudit_check(&rho, tol)?,
        (CriterionTag::Obs2Qudit, true) => {
            let d = rho.local_dim();
            let e = d_mc(&rho, a.samples, a.seed, EXEC)?;
            let bound = (n * (d - 1)) as f64 / d as f64;
            let mut v = CriterionVerdict::lower(CriterionTag::Obs2Qudit, e.mean, bound, tol)
                .with_std_error(e.std_error);
            v.insert("samples", e.samples);
            v
        }
        (CriterionTag::Obs3, false) => obs3_check(&rho, tol)?,
        (CriterionTag::Obs3, true) => {
            let exact = obs3_check(&rho, tol)?;
            let e = t_mc(&rho, a.samples, a.seed, EXEC)?;
            let mut v = CriterionVerdict::upper(CriterionTag::Obs3, e.mean.abs(), exact.bound, tol)
                .with_std_error(e.std_error);
            v.insert("t", e.mean);
            v.insert("samples", e.samples);
            v
        }
        (CriterionTag::Obs4, false) => obs4_check(&rho, even_split(n, 2)?, tol)?,
        (CriterionTag::Obs4, true) => {
            let e = two_ensemble_mc(&rho, even_split(n, 2)?, a.samples, a.seed, EXEC)?;
            let mut v = CriterionVerdict::upper(CriterionTag::Obs4, e.value, 1.0, tol)
                .with_std_error(e.std_error);
            v.insert("g2", e.g2);
            v.insert("j_a", e.j_a);
            v.insert("j_b", e.j_b);
            v.insert("samples", e.samples);
            v
        }
        (CriterionTag::MultiEnsemble, false) => {
            let m = require(a.ensembles, "ensembles", "the multi-ensemble criterion")?;
            multi_ensemble_check(&rho, m, even_split(n, m)?, tol)?
        }
        (CriterionTag::MultiEnsemble, true) => {
            return Err(CliError::Input(
                "the multi-ensemble criterion is only available with --mode analytic".into(),
            ))
        }
    };
    let seed = mc.then_some(a.seed);
    let v = with_provenance(verdict.to_json(), &config("criterion", threads, &a), seed);
    emit_json(&v, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value_t = criteria::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn scan(a: ScanArgs, threads: usize) -> CliResult {
    let rows = scan_regions(a.n, a.step, a.tol, EXEC)?;
    let mut buf = Vec::new();
    write_scan_csv(&rows, &mut buf)?;
    let meta = provenance(&config("scan", threads, &a), None);
    emit_csv(&buf, a.out.as_deref(), &meta)
}

#[derive(Args, Debug, Serialize)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: usize,
    /// Default: 200 for N <= 5, 500 otherwise (50 for --bisep).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = spinmoments::sepbound::DEFAULT_TOL)]
    pub tol: f64,
    /// Three-qubit biseparable bound instead of the fully separable one.
    #[arg(long)]
    pub bisep: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bound(mut a: BoundArgs, threads: usize) -> CliResult {
    let result = if a.bisep {
        if a.n != 3 {
            return Err(CliError::Input("--bisep is only defined for N = 3".into()));
        }
        let restarts = *a.restarts.get_or_insert(50);
        serde_json::to_value(optimize_bisep_bound_3q(
            restarts,
            a.seed,
            a.tol.max(1e-14),
            EXEC,
        )?)
    } else {
        let restarts = *a.restarts.get_or_insert(default_restarts(a.n));
        serde_json::to_value(optimize_fully_sep_bound(
            a.n, restarts, a.seed, a.tol, EXEC,
        )?)
    }
    .expect("results serialize");
    let v = with_provenance(result, &config("bound", threads, &a), Some(a.seed));
    emit_json(&v, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct BudgetArgs {
    #[arg(long)]
    pub n: usize,
    /// Confidence level γ_cl.
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    /// Noise of the singlet ρ_p; must be below 2/3.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2)]
    pub kmin: usize,
    #[arg(long, default_value_t = 1000)]
    pub kmax: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the critical-point table for N = 1..=pstar_max.
    #[arg(long)]
    pub pstar_max: Option<usize>,
    /// Path of the critical-point table (default: <out>.pstar.csv).
    #[arg(long)]
    pub pstar_out: Option<PathBuf>,
}

pub fn budget(mut a: BudgetArgs, threads: usize) -> CliResult {
    let curve = budget_curve(a.n, a.gamma, a.p, a.kmin, a.kmax)?;
    if a.pstar_max.is_some() && a.pstar_out.is_none() {
        if let Some(out) = &a.out {
            let mut s = out.as_os_str().to_owned();
            s.push(".pstar.csv");
            a.pstar_out = Some(s.into());
        }
    }
    let mut buf = Vec::new();
    write_budget_csv(&curve.rows, &mut buf)?;
    let mut meta = provenance(&config("budget", threads, &a), None);
    meta["argmin_k"] = json!(curve.argmin_k);
    meta["asymptote"] = json!(curve.asymptote);
    emit_csv(&buf, a.out.as_deref(), &meta)?;
    if let Some(max) = a.pstar_max {
        let mut table = Vec::new();
        write_pstar_csv(max, &mut table)?;
        match &a.pstar_out {
            Some(p) => fs::write(p, table)?,
            None => {
                let mut stdout = std::io::stdout();
                stdout.write_all(b"\n")?;
                stdout.write_all(&table)?;
            }
        }
    }
    Ok(())
}
