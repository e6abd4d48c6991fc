//! Spherical design quadrature for low-order moments.

use serde::{Deserialize, Serialize};

use super::{check_qubits, f_from_moments, MomentSpec};
use crate::collective::SpinMoments;
use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use crate::states::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphericalDesign {
    /// 6 points, strength 3.
    Octahedron,
    /// 12 points, strength 5.
    Icosahedron,
}

impl SphericalDesign {
    pub fn strength(self) -> usize {
        match self {
            SphericalDesign::Octahedron => 3,
            SphericalDesign::Icosahedron => 5,
        }
    }

    pub fn points(self) -> Vec<[f64; 3]> {
        match self {
            SphericalDesign::Octahedron => {
                let mut out = Vec::with_capacity(6);
                for a in 0..3 {
                    for s in [1.0, -1.0] {
                        let mut v = [0.0; 3];
                        v[a] = s;
                        out.push(v);
                    }
                }
                out
            }
            SphericalDesign::Icosahedron => {
                let phi = (1.0 + 5f64.sqrt()) / 2.0;
                let norm = (1.0 + phi * phi).sqrt();
                let mut out = Vec::with_capacity(12);
                for s1 in [1.0, -1.0] {
                    for s2 in [1.0, -1.0] {
                        let (a, b) = (s1 / norm, s2 * phi / norm);
                        out.push([0.0, a, b]);
                        out.push([a, b, 0.0]);
                        out.push([b, 0.0, a]);
                    }
                }
                out
            }
        }
    }
}

impl std::str::FromStr for SphericalDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "octahedron" => Ok(Self::Octahedron),
            "icosahedron" => Ok(Self::Icosahedron),
            other => Err(Error::Parse(format!("unknown design {other:?}"))),
        }
    }
}

/// Average of f^r over the design points; exact when strength >= 2r.
pub fn design_quadrature_moment(
    rho: &DensityMatrix,
    spec: &MomentSpec,
    design: SphericalDesign,
) -> Result<f64> {
    check_qubits(rho)?;
    let degree = 2 * spec.order as usize;
    if design.strength() < degree {
        return Err(Error::InsufficientDesignStrength {
            strength: design.strength(),
            degree,
        });
    }
    let sm = SpinMoments::of(rho)?;
    let vals: Vec<f64> = design
        .points()
        .into_iter()
        .map(|u| f_from_moments(&sm, u, spec).powi(spec.order as i32))
        .collect();
    Ok(pairwise_sum(&vals) / vals.len() as f64)
}
