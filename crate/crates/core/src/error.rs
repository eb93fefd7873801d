use thiserror::Error;

use crate::neural::LossBreakdown;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular lattice: basis vectors are linearly dependent (det = {det:e})")]
    SingularLattice { det: f64 },

    #[error("inconsistent potential coefficients: imaginary residue {imag:e} exceeds {tolerance:e}")]
    InconsistentCoefficients { imag: f64, tolerance: f64 },

    #[error("eigensolver failed to converge at k = ({kx}, {ky})")]
    NumericalFailure { kx: f64, ky: f64 },

    #[error("degenerate mode: {0}")]
    DegenerateMode(String),

    #[error("training diverged at epoch {epoch}: last losses {last:?}")]
    Diverged { epoch: usize, last: LossBreakdown },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
