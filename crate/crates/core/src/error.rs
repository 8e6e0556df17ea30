//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong when constructing or combining the
/// objects of this library.
///
/// Construction errors (`NotSquare` through `NotAState`) indicate invalid
/// input data; the remaining variants indicate that a mathematical
/// precondition of the requested operation fails.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.6e} below clamp band)")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid stochastic matrix: {0}")]
    InvalidStochasticMatrix(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("not a state: {0}")]
    NotAState(String),

    #[error("linear map is not CPTP (cp defect {cp_defect:.3e}, tp defect {tp_defect:.3e})")]
    NotCptp { cp_defect: f64, tp_defect: f64 },

    #[error("algebra is not the declared tensor product: {0}")]
    NotATensorAlgebra(String),

    #[error("joint state is not a dilation (marginal residual {residual:.3e})")]
    NotADilation { residual: f64 },

    #[error("environment dimension too small: need {needed}, got {got}")]
    DimensionTooSmall { needed: usize, got: usize },

    #[error("prior state is not faithful")]
    PriorNotFaithful,

    #[error("prediction state is not faithful")]
    PredictionNotFaithful,

    #[error("evidence is not absolutely continuous with respect to the prediction")]
    EvidenceNotAbsolutelyContinuous,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors that indicate a violated mathematical precondition
    /// of an otherwise well-formed request (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::PriorNotFaithful
                | Error::PredictionNotFaithful
                | Error::EvidenceNotAbsolutelyContinuous
                | Error::NotADilation { .. }
                | Error::DimensionTooSmall { .. }
                | Error::DimensionMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
