//! Hermite polynomials, chaos coefficients of a payoff and the two Besov
//! smoothness functionals built from them.

mod besov;
mod coefficients;
mod hermite;
mod payoff;
mod quadrature;

pub use besov::{besov_integral_criterion, besov_sum_criterion, besov_tail_index, SumCriterion, TailIndex};
pub use coefficients::{chaos_coefficients, ChaosCoefficients, DEFAULT_TRUNCATION};
pub use hermite::{hermite_eval, normalized_hermite_all, normalized_hermite_eval, scaled_hermite_all};
pub use payoff::PayoffSpec;
pub use quadrature::{gaussian_projection, GaussianProjection, QuadratureSettings};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper tail `1 − Φ(x)`, accurate for large positive `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
