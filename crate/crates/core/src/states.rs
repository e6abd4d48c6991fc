//! State families and symmetry checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::linalg::{
    eigvalsh, kron_vec, local_conjugate, ComplexMatrix, PartyStructure, MAX_EXPECTATION_DIM,
    MAX_SPECTRUM_DIM, ONE, ZERO,
};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const MAX_QUBITS: usize = 12;

/// Dense density operator with party structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    #[serde(flatten)]
    matrix: ComplexMatrix,
    #[serde(flatten)]
    structure: PartyStructure,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and (up to the spectrum cap) positivity.
    pub fn new(matrix: ComplexMatrix, structure: PartyStructure) -> Result<Self> {
        structure.check_matrix(&matrix)?;
        let defect = matrix.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::NonHermitianInput(defect));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::OutOfRange(format!("trace {tr} differs from 1")));
        }
        if structure.dim() <= MAX_SPECTRUM_DIM {
            let mut h = matrix.clone();
            h.hermitize();
            let min = eigvalsh(&h)?[0];
            if min < -PSD_TOL {
                return Err(Error::OutOfRange(format!(
                    "minimum eigenvalue {min:e} is negative"
                )));
            }
        }
        Ok(Self { matrix, structure })
    }

    /// Skips validation; for results of trace- and positivity-preserving maps.
    pub(crate) fn new_unchecked(mut matrix: ComplexMatrix, structure: PartyStructure) -> Self {
        matrix.hermitize();
        Self { matrix, structure }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self::new_unchecked(
            ComplexMatrix::outer(&psi.amplitudes, &psi.amplitudes),
            psi.structure,
        )
    }

    pub fn maximally_mixed(structure: PartyStructure) -> Self {
        let dim = structure.dim();
        Self::new_unchecked(
            ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
            structure,
        )
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn structure(&self) -> PartyStructure {
        self.structure
    }

    pub fn n_parties(&self) -> usize {
        self.structure.n_parties
    }

    pub fn local_dim(&self) -> usize {
        self.structure.local_dim
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    /// tr(ρ O), real part (O Hermitian).
    pub fn expect(&self, op: &ComplexMatrix) -> f64 {
        self.matrix.trace_product(op).re
    }

    /// Reduced state on `keep`.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = crate::linalg::partial_trace(&self.matrix, self.structure, keep)?;
        Ok(Self::new_unchecked(
            m,
            PartyStructure::new(keep.len(), self.structure.local_dim),
        ))
    }

    /// U^{⊗N} ρ (U^dagger)^{⊗N}.
    pub fn rotate_collective(&self, u: &ComplexMatrix) -> DensityMatrix {
        Self::new_unchecked(
            local_conjugate(&self.matrix, self.structure, u),
            self.structure,
        )
    }

    /// Convex combination Σ w_k ρ_k; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::OutOfRange("empty mixture".into()))?
            .1;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::OutOfRange(format!(
                "mixture weights must be a probability distribution (sum {total})"
            )));
        }
        let mut m = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.structure != first.structure {
                return Err(Error::ShapeMismatch(
                    "mixture of different structures".into(),
                ));
            }
            m.axpy(C64::new(*w, 0.0), &rho.matrix);
        }
        Ok(Self::new_unchecked(m, first.structure))
    }

    /// ρ_A ⊗ ρ_B with parties of A first.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.local_dim() != other.local_dim() {
            return Err(Error::ShapeMismatch(
                "tensor of different local dims".into(),
            ));
        }
        Ok(Self::new_unchecked(
            crate::linalg::kron(&self.matrix, &other.matrix),
            PartyStructure::new(self.n_parties() + other.n_parties(), self.local_dim()),
        ))
    }
}

/// Normalized state vector with party structure.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    structure: PartyStructure,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, structure: PartyStructure) -> Result<Self> {
        if amplitudes.len() != structure.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                structure.dim()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::OutOfRange(format!(
                "state norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            amplitudes,
            structure,
        })
    }

    /// Normalizes the input; rejects the zero vector.
    pub fn normalized(mut amplitudes: Vec<C64>, structure: PartyStructure) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::OutOfRange("zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes, structure)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn structure(&self) -> PartyStructure {
        self.structure
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
            structure: PartyStructure::new(
                self.structure.n_parties + other.structure.n_parties,
                self.structure.local_dim,
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PureWire {
    re: Vec<f64>,
    im: Vec<f64>,
    n_parties: usize,
    local_dim: usize,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureWire {
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
            n_parties: self.structure.n_parties,
            local_dim: self.structure.local_dim,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = PureWire::deserialize(d)?;
        if w.re.len() != w.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let amps =
            w.re.into_iter()
                .zip(w.im)
                .map(|(r, i)| C64::new(r, i))
                .collect();
        PureState::new(amps, PartyStructure::new(w.n_parties, w.local_dim))
            .map_err(serde::de::Error::custom)
    }
}

/// Per-qubit Bloch angles with vector (cos θ, sin θ cos φ, sin θ sin φ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVectorSet {
    pub angles: Vec<(f64, f64)>,
}

impl BlochVectorSet {
    pub fn new(angles: Vec<(f64, f64)>) -> Self {
        Self { angles }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn vector(theta: f64, phi: f64) -> [f64; 3] {
        [
            theta.cos(),
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
        ]
    }

    /// Inverse of [`Self::vector`] for a unit vector.
    pub fn angles_of(v: [f64; 3]) -> (f64, f64) {
        let theta = v[0].clamp(-1.0, 1.0).acos();
        let phi = v[2].atan2(v[1]);
        (theta, phi)
    }

    pub fn vectors(&self) -> Vec<[f64; 3]> {
        self.angles
            .iter()
            .map(|&(t, p)| Self::vector(t, p))
            .collect()
    }

    pub fn from_vectors(vs: &[[f64; 3]]) -> Self {
        Self::new(vs.iter().map(|&v| Self::angles_of(v)).collect())
    }

    /// θ_i = 2 atan(√(2 − √3)), φ_i = 2π i / N for i = 1..N.
    pub fn cone_configuration(n: usize) -> Self {
        let theta = 2.0 * (2.0 - 3f64.sqrt()).sqrt().atan();
        Self::new(
            (1..=n)
                .map(|i| (theta, 2.0 * PI * i as f64 / n as f64))
                .collect(),
        )
    }
}

fn check_qubits(n: usize, what: &str) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::OutOfRange(format!(
            "{what}: N = {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// |D_{N,m}>: equal weight on all basis states with m ones.
pub fn dicke(n: usize, m: usize) -> Result<PureState> {
    check_qubits(n, "dicke")?;
    if m > n {
        return Err(Error::OutOfRange(format!("dicke: m = {m} > N = {n}")));
    }
    let s = PartyStructure::qubits(n);
    let amp = C64::new(binomial(n, m).powf(-0.5), 0.0);
    let amps = (0..s.dim())
        .map(|i| {
            if i.count_ones() as usize == m {
                amp
            } else {
                ZERO
            }
        })
        .collect();
    PureState::new(amps, s)
}

/// |ζ_N> = Σ_k e^{2πik/N}/√N |0..1_k..0>, or σ_x^{⊗N}|ζ_N> when `flipped`.
pub fn phased_dicke(n: usize, flipped: bool) -> Result<PureState> {
    if !(3..=MAX_QUBITS).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "phased Dicke: N = {n} outside 3..={MAX_QUBITS}"
        )));
    }
    let s = PartyStructure::qubits(n);
    let dim = s.dim();
    let mut amps = vec![ZERO; dim];
    let norm = 1.0 / (n as f64).sqrt();
    for k in 1..=n {
        let idx = 1usize << (n - k);
        let idx = if flipped { dim - 1 - idx } else { idx };
        amps[idx] = C64::from_polar(norm, 2.0 * PI * k as f64 / n as f64);
    }
    PureState::new(amps, s)
}

/// (|0…0> + |1…1>)/√2
pub fn ghz(n: usize) -> Result<PureState> {
    check_qubits(n, "ghz")?;
    let s = PartyStructure::qubits(n);
    let mut amps = vec![ZERO; s.dim()];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(h, 0.0);
    amps[s.dim() - 1] = C64::new(h, 0.0);
    PureState::new(amps, s)
}

/// x|ζ_N><ζ_N| + y|ζ̃_N><ζ̃_N| + (1−x−y) 1/2^N.
pub fn mixed_family(n: usize, x: f64, y: f64) -> Result<DensityMatrix> {
    if x < 0.0 || y < 0.0 || x + y > 1.0 + 1e-12 {
        return Err(Error::OutOfRange(format!(
            "mixed family needs x, y >= 0 and x + y <= 1, got ({x}, {y})"
        )));
    }
    let zeta = phased_dicke(n, false)?.density();
    let flipped = phased_dicke(n, true)?.density();
    let mm = DensityMatrix::maximally_mixed(PartyStructure::qubits(n));
    let rest = (1.0 - x - y).max(0.0);
    DensityMatrix::mixture(&[(x, &zeta), (y, &flipped), (rest, &mm)])
}

/// Mixture over `pairings` random perfect matchings, each a product of
/// two-qubit singlets (|01> − |10>)/√2 on matched pairs.
pub fn singlet_state(n: usize, pairings: usize, seed: u64) -> Result<DensityMatrix> {
    if n % 2 == 1 {
        return Err(Error::OddN(n));
    }
    check_qubits(n, "singlet")?;
    if pairings == 0 {
        return Err(Error::OutOfRange("singlet: pairings must be >= 1".into()));
    }
    let s = PartyStructure::qubits(n);
    let mut rng = stream_rng(seed, 0);
    let mut acc = ComplexMatrix::zeros(s.dim(), s.dim());
    let w = C64::new(1.0 / pairings as f64, 0.0);
    for _ in 0..pairings {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let pairs: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], c[1])).collect();
        let psi = singlet_matching(s, &pairs);
        acc.axpy(w, &ComplexMatrix::outer(&psi, &psi));
    }
    Ok(DensityMatrix::new_unchecked(acc, s))
}

/// Product of singlets on the given disjoint pairs (a, b), a's qubit first.
pub fn singlet_matching(s: PartyStructure, pairs: &[(usize, usize)]) -> Vec<C64> {
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    (0..s.dim())
        .map(|i| {
            let bits = s.digits(i);
            pairs
                .iter()
                .fold(ONE, |acc, &(a, b)| match (bits[a], bits[b]) {
                    (0, 1) => acc * amp,
                    (1, 0) => acc * -amp,
                    _ => ZERO,
                })
        })
        .collect()
}

/// (1 − λ) ρ + λ 1/dim.
///
/// Noise weight λ. For ϱ_p = (1−p)ϱ_singlet + p 1/2^N pass λ = p; for the
/// depolarized Dicke state p ϱ_D + (1−p) 1/2^N pass λ = 1 − p.
pub fn depolarize(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange(format!(
            "noise weight {lambda} outside [0, 1]"
        )));
    }
    let mm = DensityMatrix::maximally_mixed(rho.structure());
    DensityMatrix::mixture(&[(1.0 - lambda, rho), (lambda, &mm)])
}

/// Single-qubit pure state with Bloch vector v.
pub fn qubit_from_bloch(v: [f64; 3]) -> [C64; 2] {
    let [vx, vy, vz] = v;
    let beta = vz.clamp(-1.0, 1.0).acos();
    let gamma = vy.atan2(vx);
    [
        C64::new((beta / 2.0).cos(), 0.0),
        C64::from_polar((beta / 2.0).sin(), gamma),
    ]
}

/// ⊗_i |χ_i> with the Bloch vectors of `bloch`.
pub fn product_state(bloch: &BlochVectorSet) -> Result<PureState> {
    check_qubits(bloch.len(), "product state")?;
    let amps = bloch
        .vectors()
        .iter()
        .fold(vec![ONE], |acc, &v| kron_vec(&acc, &qubit_from_bloch(v)));
    PureState::new(amps, PartyStructure::qubits(bloch.len()))
}

/// max |P_ab ρ − ρ| and max |ρ P_ab − ρ| over all pairs a < b.
pub fn symmetry_defect(rho: &DensityMatrix) -> f64 {
    let s = rho.structure();
    let m = rho.matrix();
    let dim = s.dim();
    let mut worst: f64 = 0.0;
    for a in 0..s.n_parties {
        for b in (a + 1)..s.n_parties {
            let perm: Vec<usize> = (0..dim)
                .map(|i| {
                    let mut d = s.digits(i);
                    d.swap(a, b);
                    s.index(&d)
                })
                .collect();
            // P ρ − ρ = (Sρ − ρ)/2 where (Sρ)_{ij} = ρ_{π(i) j}
            for i in 0..dim {
                for j in 0..dim {
                    let left = (m[(perm[i], j)] - m[(i, j)]).norm() / 2.0;
                    let right = (m[(i, perm[j])] - m[(i, j)]).norm() / 2.0;
                    worst = worst.max(left).max(right);
                }
            }
        }
    }
    worst
}

pub fn is_permutationally_symmetric(rho: &DensityMatrix) -> bool {
    symmetry_defect(rho) <= SYMMETRY_TOL
}

/// max |S ρ S − ρ| over all party swaps S.
pub fn permutation_invariance_defect(rho: &DensityMatrix) -> f64 {
    let s = rho.structure();
    let m = rho.matrix();
    let dim = s.dim();
    let mut worst: f64 = 0.0;
    for a in 0..s.n_parties {
        for b in (a + 1)..s.n_parties {
            let perm: Vec<usize> = (0..dim)
                .map(|i| {
                    let mut d = s.digits(i);
                    d.swap(a, b);
                    s.index(&d)
                })
                .collect();
            for i in 0..dim {
                for j in 0..dim {
                    worst = worst.max((m[(perm[i], perm[j])] - m[(i, j)]).norm());
                }
            }
        }
    }
    worst
}

/// Invariant under every party swap (weaker than living in the symmetric subspace).
pub fn is_permutation_invariant(rho: &DensityMatrix) -> bool {
    permutation_invariance_defect(rho) <= SYMMETRY_TOL
}

pub fn check_expectation_cap(structure: PartyStructure) -> Result<()> {
    if structure.dim() > MAX_EXPECTATION_DIM {
        return Err(Error::OutOfRange(format!(
            "dimension {} exceeds the cap {MAX_EXPECTATION_DIM}",
            structure.dim()
        )));
    }
    Ok(())
}

/// Random states for tests, sweeps and benchmarks.
pub mod random {
    use super::*;
    use rand_distr::StandardNormal;

    fn gaussian_c(rng: &mut impl Rng) -> C64 {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Haar-random pure state.
    pub fn pure_state(structure: PartyStructure, rng: &mut impl Rng) -> PureState {
        let amps = (0..structure.dim()).map(|_| gaussian_c(rng)).collect();
        PureState::normalized(amps, structure).expect("nonzero Gaussian vector")
    }

    /// Random mixed state of the given rank (Ginibre construction).
    pub fn mixed_state(
        structure: PartyStructure,
        rank: usize,
        rng: &mut impl Rng,
    ) -> DensityMatrix {
        let dim = structure.dim();
        let g = ComplexMatrix::from_fn(dim, rank.max(1), |_, _| gaussian_c(rng));
        let m = g.matmul(&g.adjoint());
        let t = m.trace().re;
        DensityMatrix::new_unchecked(m.scale_real(1.0 / t), structure)
    }

    /// Random pure state on the symmetric subspace (span of the Dicke states).
    pub fn symmetric_pure(n: usize, rng: &mut impl Rng) -> PureState {
        let s = PartyStructure::qubits(n);
        let mut amps = vec![ZERO; s.dim()];
        for m in 0..=n {
            let c = gaussian_c(rng);
            let d = dicke(n, m).expect("valid Dicke");
            for (a, b) in amps.iter_mut().zip(d.amplitudes()) {
                *a += c * b;
            }
        }
        PureState::normalized(amps, s).expect("nonzero")
    }

    /// Mixture of `rank` random symmetric pure states with random weights.
    pub fn symmetric_state(n: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
        let pures: Vec<DensityMatrix> = (0..rank.max(1))
            .map(|_| symmetric_pure(n, rng).density())
            .collect();
        let raw: Vec<f64> = pures.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let parts: Vec<(f64, &DensityMatrix)> =
            raw.iter().map(|w| w / total).zip(pures.iter()).collect();
        DensityMatrix::mixture(&parts).expect("valid weights")
    }

    pub fn unit_vector(rng: &mut impl Rng) -> [f64; 3] {
        loop {
            let v: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-12 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    pub fn bloch_set(n: usize, rng: &mut impl Rng) -> BlochVectorSet {
        let vs: Vec<[f64; 3]> = (0..n).map(|_| unit_vector(rng)).collect();
        BlochVectorSet::from_vectors(&vs)
    }

    /// Pure product state of qudits with Haar-random factors.
    pub fn product_pure(n: usize, d: usize, rng: &mut impl Rng) -> PureState {
        let mut amps = vec![ONE];
        for _ in 0..n {
            let f = pure_state(PartyStructure::new(1, d), rng);
            amps = kron_vec(&amps, f.amplitudes());
        }
        PureState::new(amps, PartyStructure::new(n, d)).expect("unit norm")
    }

    /// Mixture of up to `max_terms` random pure product states.
    pub fn separable_state(
        n: usize,
        d: usize,
        max_terms: usize,
        rng: &mut impl Rng,
    ) -> DensityMatrix {
        let terms = rng.random_range(1..=max_terms.max(1));
        let parts: Vec<DensityMatrix> = (0..terms)
            .map(|_| product_pure(n, d, rng).density())
            .collect();
        let raw: Vec<f64> = parts.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let weighted: Vec<(f64, &DensityMatrix)> =
            raw.iter().map(|w| w / total).zip(parts.iter()).collect();
        DensityMatrix::mixture(&weighted).expect("valid weights")
    }
}
