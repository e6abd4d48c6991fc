//! Collective randomized measurements on spin ensembles.
//!
//! Moments of randomly rotated collective spin observables (Monte Carlo and
//! closed form), entanglement criteria built on them, numerical separability
//! bounds for the antisymmetric three-body observable, and finite-statistics
//! measurement budgets.
//!
//! Qubit 0 is the most significant bit of every computational index. Party
//! indices are 0-based throughout the API.

pub mod collective;
pub mod criteria;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod sepbound;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
