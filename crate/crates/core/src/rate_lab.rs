//! Rate experiments: sweeps over the number of rebalancing dates, power-law
//! fits, and smoothness reports for the payoff.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic_error::{net_error_l2, theoretical_slope};
use crate::hedging_simulator::{mc_l2_error, McEstimate};
use crate::hermite_chaos::{
    besov_integral_criterion, besov_sum_criterion, besov_tail_index, ChaosCoefficients, PayoffSpec, TailIndex,
};
use crate::singular_model::{SingularVolatility, TimeNet};
use crate::{Error, Result};

pub const DEFAULT_N_VALUES: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];
pub const DEFAULT_N_PATHS: u64 = 100_000;
/// `θ` used for payoffs with a terminating chaos.
pub const FINITE_CHAOS_THETA: f64 = 0.99;
/// Errors this small relative to `‖g‖` are quadrature noise, not hedging error.
pub const DEGENERATE_RATIO: f64 = 1e-8;
/// Distance kept below an estimated critical smoothness.
pub const BOUNDARY_MARGIN: f64 = 0.05;

/// Least-squares fit of `log y = intercept + slope · log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope.
    pub slope_ci: (f64, f64),
    pub slope_std_error: f64,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("ys", "xs and ys differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::invalid("xs", "need at least three points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("xs", "all points must be positive and finite"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("xs", "all abscissae coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = n - 2.0;
    let se = (ssr / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::invalid("xs", e.to_string()))?.inverse_cdf(0.975);
    Ok(PowerLawFit { slope, intercept, slope_ci: (slope - t * se, slope + t * se), slope_std_error: se })
}

/// `θ` policy: `0.99` for terminating chaos, otherwise the estimated
/// critical smoothness minus [`BOUNDARY_MARGIN`], capped at `0.99`.
pub fn select_theta(c: &ChaosCoefficients) -> Result<f64> {
    match besov_tail_index(c)? {
        TailIndex::SuperPolynomial => Ok(FINITE_CHAOS_THETA),
        TailIndex::Critical { theta, .. } => {
            let chosen = (theta - BOUNDARY_MARGIN).min(FINITE_CHAOS_THETA);
            if chosen > 0.0 {
                Ok(chosen)
            } else {
                Err(Error::invalid("theta", format!("estimated critical smoothness {theta} leaves no admissible θ")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub analytic_error: f64,
    pub mc: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepResult {
    pub n_values: Vec<usize>,
    pub analytic_errors: Vec<f64>,
    pub mc_errors: Vec<McEstimate>,
    pub fit: PowerLawFit,
    pub fitted_slope: f64,
    pub slope_ci: (f64, f64),
    /// `exp(intercept)`, the empirical constant in `c₂ n^{slope}`.
    pub fitted_c2: f64,
    pub theoretical_slope: f64,
    pub theta_used: f64,
    pub beta: f64,
    pub config_digest: String,
}

impl RateSweepResult {
    /// `fitted_c2 · n^{−βθ/2}` at every sweep point.
    pub fn bound_curve(&self) -> Vec<f64> {
        self.n_values.iter().map(|&n| self.fitted_c2 * (n as f64).powf(self.theoretical_slope)).collect()
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        self.n_values
            .iter()
            .zip(&self.analytic_errors)
            .zip(&self.mc_errors)
            .map(|((&n, &analytic_error), &mc)| SweepPoint { n, analytic_error, mc })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec<'a> {
    pub coefficients: &'a ChaosCoefficients,
    pub model: &'a SingularVolatility,
    /// Evaluated directly at maturity in the simulator when present.
    pub payoff: Option<&'a PayoffSpec>,
    pub n_values: &'a [usize],
    /// `0` skips the simulation.
    pub n_paths: u64,
    pub seed: u64,
    pub theta: Option<f64>,
    pub config_digest: String,
}

/// Analytic and simulated errors on equidistant nets, with the rate fitted
/// from the analytic values.
pub fn rate_sweep(spec: &SweepSpec<'_>) -> Result<RateSweepResult> {
    let mut n_values = spec.n_values.to_vec();
    n_values.sort_unstable();
    n_values.dedup();
    if n_values.len() < 3 || n_values[0] == 0 {
        return Err(Error::invalid("n_values", "need at least three distinct positive values"));
    }
    if spec.n_paths != 0 && spec.n_paths < 1000 {
        return Err(Error::invalid("n_paths", "need at least 1000 paths"));
    }
    let theta = match spec.theta {
        Some(t) if t > 0.0 && t < 1.0 => t,
        Some(t) => return Err(Error::invalid("theta", format!("{t} is outside (0, 1)"))),
        None => select_theta(spec.coefficients)?,
    };
    let horizon = spec.model.horizon();
    let mut analytic_errors = Vec::with_capacity(n_values.len());
    let mut hedged_errors = Vec::with_capacity(n_values.len());
    let mut mc_errors = Vec::with_capacity(n_values.len());
    for &n in &n_values {
        let net = TimeNet::equidistant(n, horizon)?;
        let e = net_error_l2(spec.coefficients, spec.model, &net)?;
        analytic_errors.push(e.value());
        hedged_errors.push(e.series_value());
        let mc = if spec.n_paths == 0 {
            McEstimate { mean: f64::NAN, std_error: f64::NAN, n_paths: 0, seed: spec.seed }
        } else {
            mc_l2_error(spec.coefficients, spec.model, &net, spec.payoff, spec.n_paths, spec.seed)?
        };
        mc_errors.push(mc);
    }
    let scale = spec.coefficients.l2_norm_sq_estimate().sqrt();
    if hedged_errors.iter().all(|e| *e <= DEGENERATE_RATIO * scale) {
        return Err(Error::DegenerateSweep);
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
    let fit = fit_power_law(&xs, &analytic_errors)?;
    Ok(RateSweepResult {
        n_values,
        analytic_errors,
        mc_errors,
        fit,
        fitted_slope: fit.slope,
        slope_ci: fit.slope_ci,
        fitted_c2: fit.intercept.exp(),
        theoretical_slope: theoretical_slope(spec.model, theta),
        theta_used: theta,
        beta: spec.model.beta(),
        config_digest: spec.config_digest.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessRow {
    pub theta: f64,
    pub sum_criterion: f64,
    pub integral_criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub rows: Vec<SmoothnessRow>,
    pub tail_index: TailIndex,
    pub truncation_order: usize,
    pub parseval_residual: f64,
}

pub fn smoothness_report(c: &ChaosCoefficients, theta_grid: &[f64]) -> Result<SmoothnessReport> {
    if theta_grid.is_empty() {
        return Err(Error::invalid("theta_grid", "must not be empty"));
    }
    let rows = theta_grid
        .iter()
        .map(|&theta| {
            Ok(SmoothnessRow {
                theta,
                sum_criterion: besov_sum_criterion(c, theta)?.value,
                integral_criterion: besov_integral_criterion(c, theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SmoothnessReport {
        rows,
        tail_index: besov_tail_index(c)?,
        truncation_order: c.truncation_order(),
        parseval_residual: c.parseval_residual(),
    })
}

/// Nine evenly spaced smoothness levels `0.1, …, 0.9`.
pub fn default_theta_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}
