use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge after {refinements} refinements (last change {residual:.3e})")]
    QuadratureNotConverged { refinements: usize, residual: f64 },

    #[error("tabulated grid [{lo}, {hi}] does not cover the quadrature support [-{half_width}, {half_width}]")]
    TabulatedSupport { lo: f64, hi: f64, half_width: f64 },

    #[error("too few nonzero tail coefficients: found {found}, need at least {needed}")]
    TooFewCoefficients { found: usize, needed: usize },

    #[error("interval covariance is not positive semi-definite on [{a}, {b}] (schur complement {schur:.3e})")]
    CholeskyFailure { a: f64, b: f64, schur: f64 },

    #[error("hedging error is identically zero; there is no rate to fit")]
    DegenerateSweep,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
