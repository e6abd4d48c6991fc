//! Dense complex matrix substrate.

mod eig;
mod matrix;
mod parties;
pub mod pauli;

pub use eig::{eigvalsh, hermitian_eig, rank, Eigh, MAX_SWEEPS, SWEEP_THRESHOLD};
pub use matrix::{kron, kron_all, kron_vec, ComplexMatrix, HERMITIAN_TOL, I, ONE, ZERO};
pub use parties::{
    add_local_product, embed, embed_many, local_apply_vec, local_conjugate, local_product_trace,
    partial_trace, partial_transpose, swap_operator, symmetric_projector_pair, PartyStructure,
};

/// Dimension cap for full-spectrum work (10 qubits).
pub const MAX_SPECTRUM_DIM: usize = 1 << 10;
/// Dimension cap for expectation-only work (12 qubits).
pub const MAX_EXPECTATION_DIM: usize = 1 << 12;
