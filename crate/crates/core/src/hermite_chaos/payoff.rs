use serde::{Deserialize, Serialize};

use super::normalized_hermite_eval;
use crate::{Error, Result};

/// The payoff `g` applied to the Gaussian variable `W(η)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    /// `1{x ≥ K}`.
    Indicator { strike: f64 },
    /// `(x − K)⁺`.
    Call { strike: f64 },
    /// The orthonormal Hermite polynomial `He_m(x)/√(m!)`.
    PureHermite { order: usize },
    /// `Σ a_k x^k` with `coefficients[k] = a_k`.
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise-linear interpolation of `values` on a strictly increasing
    /// `grid`, held flat outside it.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl PayoffSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PayoffSpec::Indicator { strike } | PayoffSpec::Call { strike } => {
                if !strike.is_finite() {
                    return Err(Error::invalid("strike", "must be finite"));
                }
            }
            PayoffSpec::PureHermite { .. } => {}
            PayoffSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::invalid("coefficients", "must not be empty"));
                }
                if coefficients.iter().any(|a| !a.is_finite()) {
                    return Err(Error::invalid("coefficients", "must be finite"));
                }
            }
            PayoffSpec::Tabulated { grid, values } => {
                if grid.len() < 2 {
                    return Err(Error::invalid("grid", "needs at least two points"));
                }
                if grid.len() != values.len() {
                    return Err(Error::invalid(
                        "values",
                        format!("length {} differs from grid length {}", values.len(), grid.len()),
                    ));
                }
                if grid.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("grid", "grid and values must be finite"));
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("grid", "must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    /// Direct evaluation of `g(x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            PayoffSpec::Indicator { strike } => {
                if x >= *strike {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffSpec::Call { strike } => (x - strike).max(0.0),
            PayoffSpec::PureHermite { order } => normalized_hermite_eval(*order, x),
            PayoffSpec::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, a| acc * x + a),
            PayoffSpec::Tabulated { grid, values } => interpolate(grid, values, x),
        }
    }

    /// Points where `g` or one of its low derivatives jumps. Quadrature
    /// panels are split there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PayoffSpec::Indicator { strike } | PayoffSpec::Call { strike } => vec![*strike],
            PayoffSpec::Tabulated { grid, .. } => grid.clone(),
            PayoffSpec::PureHermite { .. } | PayoffSpec::Polynomial { .. } => Vec::new(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PayoffSpec::Indicator { .. } => "indicator",
            PayoffSpec::Call { .. } => "call",
            PayoffSpec::PureHermite { .. } => "pure_hermite",
            PayoffSpec::Polynomial { .. } => "polynomial",
            PayoffSpec::Tabulated { .. } => "tabulated",
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let last = grid.len() - 1;
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[last] {
        return values[last];
    }
    let hi = grid.partition_point(|&g| g <= x);
    let lo = hi - 1;
    let w = (x - grid[lo]) / (grid[hi] - grid[lo]);
    values[lo] + w * (values[hi] - values[lo])
}
