use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fragment size {k} out of range for {n} environment spins")]
    FragmentSize { k: usize, n: usize },

    #[error("{what} of {size} exceeds the configured cap of {cap}")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("decoherence factor modulus {modulus} exceeds 1")]
    FactorModulus { modulus: f64 },

    /// An eigenvalue fell below the clamping threshold, so the matrix it came
    /// from was not a valid density matrix.
    #[error("eigenvalue {value:e} below clamp threshold (matrix is not positive semidefinite)")]
    NegativeEigenvalue { value: f64 },

    #[error("matrix is not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical invariant (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NegativeEigenvalue { .. }
                | Error::NotDensityMatrix { .. }
                | Error::FactorModulus { .. }
        )
    }
}
