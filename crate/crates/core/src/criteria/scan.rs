//! Region scan of the mixed family x|ζ⟩⟨ζ| + y|ζ̃⟩⟨ζ̃| + (1−x−y) 1/2^N.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ppt_classify, GME_BOUND_3Q};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::moments::t_average;
use crate::sepbound::conjectured_bound;
use crate::states::mixed_family;

pub const MAX_SCAN_QUBITS: usize = 6;
const LATTICE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    SepUndetected,
    Detected,
    BoundEntangledDetected,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::SepUndetected => "sep-undetected",
            Region::Detected => "detected",
            Region::BoundEntangledDetected => "bound-entangled-detected",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub y: f64,
    pub t_abs: f64,
    pub fs_bound: f64,
    /// Only known for three qubits.
    pub bisep_bound: Option<f64>,
    pub ppt_all: bool,
    pub region: Region,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "x,y,t_abs,fs_bound,bisep_bound,ppt_all,region";

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let bisep = self.bisep_bound.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.x, self.y, self.t_abs, self.fs_bound, bisep, self.ppt_all, self.region
        )
    }
}

/// Lattice points (i·step, j·step) with x + y <= 1, row-major in x then y.
pub fn lattice(step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "grid step must be in (0, 1], got {step}"
        )));
    }
    let count = (1.0 / step + LATTICE_SLACK).floor() as usize;
    let mut pts = Vec::new();
    for i in 0..=count {
        let x = i as f64 * step;
        for j in 0..=count - i {
            let y = j as f64 * step;
            if x + y <= 1.0 + LATTICE_SLACK {
                pts.push((x, y.min(1.0 - x).max(0.0)));
            }
        }
    }
    Ok(pts)
}

/// One row per lattice point; computed in parallel, returned in lattice order.
pub fn scan_regions(n: usize, step: f64, tol: f64, exec: Execution) -> Result<Vec<ScanRow>> {
    if !(3..=MAX_SCAN_QUBITS).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "scan needs 3 <= N <= {MAX_SCAN_QUBITS}, got {n}"
        )));
    }
    let pts = lattice(step)?;
    let fs_bound = conjectured_bound(n)?;
    let bisep_bound = (n == 3).then_some(GME_BOUND_3Q);
    map_indexed(pts.len(), exec, |k| {
        let (x, y) = pts[k];
        let rho = mixed_family(n, x, y)?;
        let t_abs = t_average(&rho)?.abs();
        let ppt_all = ppt_classify(&rho)?.ppt_all;
        let region = match (t_abs > fs_bound + tol, ppt_all) {
            (false, _) => Region::SepUndetected,
            (true, false) => Region::Detected,
            (true, true) => Region::BoundEntangledDetected,
        };
        Ok(ScanRow {
            x,
            y,
            t_abs,
            fs_bound,
            bisep_bound,
            ppt_all,
            region,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_scan_csv(rows: &[ScanRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", ScanRow::CSV_HEADER)?;
    for r in rows {
        r.write_csv(out)?;
    }
    Ok(())
}
