use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {x} lies outside the domain [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },
    #[error("covariance has no closed-form kernel")]
    NotClosedForm,
    #[error("covariance has neither a Mercer basis nor a discretizable kernel")]
    NoMercerBasis,
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("covariance is materially indefinite: smallest eigenvalue {min:e}, largest {max:e}")]
    Indefinite { min: f64, max: f64 },
    #[error("covariance blind to leading right singular subspace")]
    BlindCovariance,
    #[error("argument {0} is outside the accuracy envelope")]
    OutOfEnvelope(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numbers themselves rather than by how
    /// the computation was configured.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric(_)
                | Error::Indefinite { .. }
                | Error::BlindCovariance
                | Error::OutOfEnvelope(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
