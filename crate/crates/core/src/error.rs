use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NonHermitianInput: max |A - A^dagger| = {0:e}")]
    NonHermitianInput(f64),
    #[error("BadPartition: {0}")]
    BadPartition(String),
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("OddN: the many-body singlet needs an even number of qubits, got {0}")]
    OddN(usize),
    #[error("BadDirection: |u| = {0} is not a unit vector")]
    BadDirection(f64),
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("NotSymmetric: {0}")]
    NotSymmetric(String),
    #[error("ComplexRoots: cubic discriminant {0:e} indicates non-real roots")]
    ComplexRoots(f64),
    #[error("BadArity: expected 2, 4 or 6 indices, got {0}")]
    BadArity(usize),
    #[error("InsufficientDesignStrength: design of strength {strength} cannot integrate degree {degree}")]
    InsufficientDesignStrength { strength: usize, degree: usize },
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("TooFewShots: need K >= 2, got {0}")]
    TooFewShots(usize),
    #[error("Parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Invalid-input errors map to CLI exit code 2, everything else to 1.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::BadPartition(_)
                | Error::OutOfRange(_)
                | Error::OddN(_)
                | Error::BadDirection(_)
                | Error::ShapeMismatch(_)
                | Error::BadArity(_)
                | Error::InsufficientDesignStrength { .. }
                | Error::TooFewShots(_)
                | Error::Parse(_)
        )
    }
}
