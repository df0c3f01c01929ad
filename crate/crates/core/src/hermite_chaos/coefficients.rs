use serde::{Deserialize, Serialize};

use super::{gaussian_projection, normal_pdf, normal_sf, normalized_hermite_all, PayoffSpec, QuadratureSettings};
use crate::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 64;

/// Relative slack allowed when checking `Σ c_n² ≤ ‖g‖²`.
const PARSEVAL_TOLERANCE: f64 = 1e-9;

/// Orthonormal Hermite coefficients `c_0..=c_N` of a payoff,
/// `g = Σ c_n He_n/√(n!)`, with an estimate of `‖g‖²_{L₂(γ)}` for
/// truncation accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCoefficients {
    coeffs: Vec<f64>,
    l2_norm_sq_estimate: f64,
}

impl ChaosCoefficients {
    pub fn new(coeffs: Vec<f64>, l2_norm_sq_estimate: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "need at least c_0"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coeffs", "all coefficients must be finite"));
        }
        if !(l2_norm_sq_estimate.is_finite() && l2_norm_sq_estimate >= 0.0) {
            return Err(Error::invalid("l2_norm_sq_estimate", "must be finite and non-negative"));
        }
        let partial: f64 = coeffs.iter().map(|c| c * c).sum();
        if partial > l2_norm_sq_estimate * (1.0 + PARSEVAL_TOLERANCE) + 1e-15 {
            return Err(Error::invalid(
                "l2_norm_sq_estimate",
                format!("Parseval violated: Σ c_n² = {partial} exceeds ‖g‖² = {l2_norm_sq_estimate}"),
            ));
        }
        Ok(ChaosCoefficients { coeffs, l2_norm_sq_estimate })
    }

    /// A finite chaos: the coefficients are the whole expansion.
    pub fn finite(coeffs: Vec<f64>) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c * c).sum();
        Self::new(coeffs, norm)
    }

    /// Coefficient vector with a single nonzero entry `c_n = value`.
    pub fn single(n: usize, value: f64) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = value;
        Self::finite(coeffs).expect("finite single coefficient")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn l2_norm_sq_estimate(&self) -> f64 {
        self.l2_norm_sq_estimate
    }

    pub fn partial_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `‖g‖² − Σ_{n≤N} c_n²`, the mass of the chaos beyond the truncation.
    pub fn parseval_residual(&self) -> f64 {
        (self.l2_norm_sq_estimate - self.partial_norm_sq()).max(0.0)
    }

    /// Same expansion cut at order `n` (or unchanged when already shorter).
    pub fn truncated(&self, n: usize) -> Self {
        let keep = (n + 1).min(self.coeffs.len());
        ChaosCoefficients { coeffs: self.coeffs[..keep].to_vec(), l2_norm_sq_estimate: self.l2_norm_sq_estimate }
    }
}

/// Chaos coefficients of `g` up to order `truncation`.
///
/// Indicator, call and pure-Hermite payoffs use closed forms and ignore
/// `quad`; the rest are projected numerically.
pub fn chaos_coefficients(
    payoff: &PayoffSpec,
    truncation: usize,
    quad: &QuadratureSettings,
) -> Result<ChaosCoefficients> {
    payoff.validate()?;
    match payoff {
        PayoffSpec::Indicator { strike } => Ok(indicator(*strike, truncation)),
        PayoffSpec::Call { strike } => Ok(call(*strike, truncation)),
        PayoffSpec::PureHermite { order } => {
            let mut coeffs = vec![0.0; truncation + 1];
            if *order <= truncation {
                coeffs[*order] = 1.0;
            }
            ChaosCoefficients::new(coeffs, 1.0)
        }
        PayoffSpec::Tabulated { grid, .. } => {
            let (lo, hi) = (grid[0], grid[grid.len() - 1]);
            if lo > -quad.half_width || hi < quad.half_width {
                return Err(Error::TabulatedSupport { lo, hi, half_width: quad.half_width });
            }
            projected(payoff, truncation, quad)
        }
        PayoffSpec::Polynomial { .. } => projected(payoff, truncation, quad),
    }
}

fn projected(payoff: &PayoffSpec, truncation: usize, quad: &QuadratureSettings) -> Result<ChaosCoefficients> {
    let proj = gaussian_projection(|x| payoff.evaluate(x), &payoff.breakpoints(), truncation, quad)?;
    // Quadrature noise can push Σ c² a hair above the quadrature norm.
    let partial: f64 = proj.coeffs.iter().map(|c| c * c).sum();
    ChaosCoefficients::new(proj.coeffs, proj.norm_sq.max(partial))
}

// c_0 = 1 − Φ(K), c_n = φ(K) He_{n−1}(K)/√(n!) = φ(K) q_{n−1}(K)/√n.
fn indicator(strike: f64, truncation: usize) -> ChaosCoefficients {
    let tail = normal_sf(strike);
    let density = normal_pdf(strike);
    let mut q = Vec::new();
    normalized_hermite_all(truncation.saturating_sub(1), strike, &mut q);
    let mut coeffs = Vec::with_capacity(truncation + 1);
    coeffs.push(tail);
    for n in 1..=truncation {
        coeffs.push(density * q[n - 1] / (n as f64).sqrt());
    }
    let norm = tail;
    let partial: f64 = coeffs.iter().map(|c| c * c).sum();
    ChaosCoefficients { coeffs, l2_norm_sq_estimate: norm.max(partial) }
}

// c_0 = φ(K) − K(1 − Φ(K)), c_1 = 1 − Φ(K), c_n = φ(K) q_{n−2}(K)/√(n(n−1)).
fn call(strike: f64, truncation: usize) -> ChaosCoefficients {
    let tail = normal_sf(strike);
    let density = normal_pdf(strike);
    let mut q = Vec::new();
    normalized_hermite_all(truncation.saturating_sub(2), strike, &mut q);
    let mut coeffs = Vec::with_capacity(truncation + 1);
    coeffs.push(density - strike * tail);
    if truncation >= 1 {
        coeffs.push(tail);
    }
    for n in 2..=truncation {
        let nf = n as f64;
        coeffs.push(density * q[n - 2] / (nf * (nf - 1.0)).sqrt());
    }
    // E[((X − K)⁺)²] = (1 + K²)(1 − Φ(K)) − K φ(K)
    let norm = (1.0 + strike * strike) * tail - strike * density;
    let partial: f64 = coeffs.iter().map(|c| c * c).sum();
    ChaosCoefficients { coeffs, l2_norm_sq_estimate: norm.max(partial) }
}
