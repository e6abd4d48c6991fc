//! Partial-transpose spectra over all bipartitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, partial_transpose, MAX_SPECTRUM_DIM};
use crate::states::DensityMatrix;

/// Eigenvalues above −PPT_TOL count as nonnegative.
pub const PPT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptEntry {
    /// Lexicographically smaller side of the bipartition.
    pub side: Vec<usize>,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub entries: Vec<PptEntry>,
    pub ppt_all: bool,
    pub min_eigenvalue: f64,
}

/// Proper bipartitions of n parties, each listed once by the side holding
/// party 0 (the lexicographically smaller side), in lexicographic order.
pub fn bipartitions(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    let mut out: Vec<Vec<usize>> = (0..(1usize << (n - 1)) - 1)
        .map(|rest| {
            let mut side = vec![0];
            side.extend((1..n).filter(|k| rest >> (k - 1) & 1 == 1));
            side
        })
        .collect();
    out.sort();
    out
}

pub fn ppt_classify(rho: &DensityMatrix) -> Result<PptReport> {
    let s = rho.structure();
    if s.dim() > MAX_SPECTRUM_DIM {
        return Err(Error::OutOfRange(format!(
            "PPT classification is capped at dimension {MAX_SPECTRUM_DIM}, got {}",
            s.dim()
        )));
    }
    let mut entries = Vec::new();
    for side in bipartitions(s.n_parties) {
        let pt = partial_transpose(rho.matrix(), s, &side)?;
        let min_eigenvalue = eigvalsh(&pt)?[0];
        entries.push(PptEntry {
            side,
            min_eigenvalue,
        });
    }
    let min_eigenvalue = entries
        .iter()
        .map(|e| e.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    Ok(PptReport {
        ppt_all: min_eigenvalue >= -PPT_TOL,
        entries,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::states::{dicke, random, singlet_state};

    #[test]
    fn bipartition_enumeration() {
        assert_eq!(bipartitions(3), vec![vec![0], vec![0, 1], vec![0, 2]]);
        assert_eq!(bipartitions(4).len(), 7);
        assert_eq!(bipartitions(6).len(), 31);
    }

    #[test]
    fn singlet_is_npt() {
        let r = ppt_classify(&singlet_state(2, 1, 0).unwrap()).unwrap();
        assert!((r.min_eigenvalue + 0.5).abs() < 1e-12);
        assert!(!r.ppt_all);
    }

    #[test]
    fn products_are_ppt() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let rho = random::separable_state(3, 2, 4, &mut rng);
            assert!(ppt_classify(&rho).unwrap().ppt_all);
        }
        assert!(
            ppt_classify(&dicke(3, 0).unwrap().density())
                .unwrap()
                .ppt_all
        );
    }
}
