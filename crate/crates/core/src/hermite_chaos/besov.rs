use serde::{Deserialize, Serialize};

use super::ChaosCoefficients;
use crate::rate_lab::fit_power_law;
use crate::{Error, Result};

/// Minimum number of nonzero tail coefficients for a decay fit.
const MIN_TAIL_COEFFICIENTS: usize = 10;
/// Width of the index blocks that are summed before fitting; averages out
/// the period-four sign pattern of `He_n(K)`.
const TAIL_BLOCK: usize = 4;
/// `c_n²` below this fraction of `max c_n²` counts as zero.
const ZERO_THRESHOLD: f64 = 1e-24;
const PARSEVAL_SLACK: f64 = 1e-12;

/// Truncated `Σ_{n≥1} c_n² n^θ` with what is known about the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumCriterion {
    pub value: f64,
    pub parseval_residual: f64,
    /// `(N+1)^θ · residual`; the neglected tail is at least this large and
    /// has no finite upper bound from Parseval alone.
    pub tail_lower_bound: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("theta", format!("{theta} is outside (0, 1)")))
    }
}

pub fn besov_sum_criterion(c: &ChaosCoefficients, theta: f64) -> Result<SumCriterion> {
    check_theta(theta)?;
    let value = c.coeffs().iter().enumerate().skip(1).map(|(n, cn)| cn * cn * (n as f64).powf(theta)).sum();
    let residual = c.parseval_residual();
    let next = (c.truncation_order() + 1) as f64;
    Ok(SumCriterion { value, parseval_residual: residual, tail_lower_bound: residual * next.powf(theta) })
}

/// `Σ_{n≥2} n! c_n² / ∏_{k=2}^{n}(k − θ)` over the truncated range.
///
/// The weight `∏ k/(k − θ)` is accumulated as `−Σ ln(1 − θ/k)`.
pub fn besov_integral_criterion(c: &ChaosCoefficients, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let mut log_weight = 0.0;
    let mut total = 0.0;
    for (n, cn) in c.coeffs().iter().enumerate().skip(2) {
        log_weight -= (-theta / n as f64).ln_1p();
        total += cn * cn * log_weight.exp();
    }
    Ok(total)
}

/// Estimated critical smoothness of a coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailIndex {
    /// The chaos terminates well before the truncation order.
    SuperPolynomial,
    /// `c_n² ~ n^slope` with critical `θ = −(1 + slope)`.
    Critical { theta: f64, slope: f64 },
}

impl TailIndex {
    pub fn critical_theta(&self) -> f64 {
        match self {
            TailIndex::SuperPolynomial => f64::INFINITY,
            TailIndex::Critical { theta, .. } => *theta,
        }
    }
}

/// Fits `c_n² ~ n^slope` on the upper half of the coefficient range.
///
/// Coefficients are summed over blocks of consecutive indices first, so that
/// parity zeros and sign oscillation do not bias the log-log fit.
pub fn besov_tail_index(c: &ChaosCoefficients) -> Result<TailIndex> {
    let sq: Vec<f64> = c.coeffs().iter().map(|x| x * x).collect();
    let peak = sq.iter().skip(1).copied().fold(0.0, f64::max);
    let n_max = c.truncation_order();
    let is_zero = |v: f64| v <= ZERO_THRESHOLD * peak;

    let last_nonzero = (1..=n_max).rev().find(|&n| !is_zero(sq[n])).unwrap_or(0);
    if peak == 0.0 || last_nonzero + MIN_TAIL_COEFFICIENTS <= n_max {
        return Ok(TailIndex::SuperPolynomial);
    }
    // too short to fit, but nothing is missing from the expansion either
    if n_max < 2 * MIN_TAIL_COEFFICIENTS && c.parseval_residual() <= PARSEVAL_SLACK * c.l2_norm_sq_estimate() {
        return Ok(TailIndex::SuperPolynomial);
    }

    let start = (n_max / 2).max(1);
    let nonzero = (start..=n_max).filter(|&n| !is_zero(sq[n])).count();
    if nonzero < MIN_TAIL_COEFFICIENTS {
        return Err(Error::TooFewCoefficients { found: nonzero, needed: MIN_TAIL_COEFFICIENTS });
    }

    let mut centers = Vec::new();
    let mut sums = Vec::new();
    let mut lo = start;
    while lo + TAIL_BLOCK - 1 <= n_max {
        let block = &sq[lo..lo + TAIL_BLOCK];
        let s: f64 = block.iter().sum();
        if s > 0.0 {
            // geometric centre of the block
            let centre = ((lo..lo + TAIL_BLOCK).map(|n| (n as f64).ln()).sum::<f64>() / TAIL_BLOCK as f64).exp();
            centers.push(centre);
            sums.push(s);
        }
        lo += TAIL_BLOCK;
    }
    if centers.len() < 3 {
        return Err(Error::TooFewCoefficients { found: nonzero, needed: MIN_TAIL_COEFFICIENTS });
    }
    let fit = fit_power_law(&centers, &sums)?;
    Ok(TailIndex::Critical { theta: -(1.0 + fit.slope), slope: fit.slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite_chaos::{chaos_coefficients, PayoffSpec, QuadratureSettings};
    use approx::assert_relative_eq;

    fn synthetic(n_max: usize, decay: f64) -> ChaosCoefficients {
        let coeffs: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { (n as f64).powf(-decay / 2.0) }).collect();
        ChaosCoefficients::finite(coeffs).unwrap()
    }

    #[test]
    fn sum_criterion_single_terms() {
        assert_relative_eq!(besov_sum_criterion(&ChaosCoefficients::single(1, 1.0), 0.5).unwrap().value, 1.0);
        assert_relative_eq!(
            besov_sum_criterion(&ChaosCoefficients::single(4, 2.0), 0.5).unwrap().value,
            8.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sum_criterion_matches_direct_summation() {
        let c = synthetic(10_000, 2.0);
        let got = besov_sum_criterion(&c, 0.9).unwrap().value;
        // c_n² = n^{-2}, so the terms are n^{-1.1}; summed smallest first.
        let oracle: f64 = (1..=10_000u32).rev().map(|n| (n as f64).powf(-1.1)).sum();
        assert_relative_eq!(got, oracle, max_relative = 1e-12);
    }

    #[test]
    fn sum_criterion_reports_tail() {
        let c = chaos_coefficients(&PayoffSpec::Indicator { strike: 0.0 }, 64, &QuadratureSettings::default()).unwrap();
        let s = besov_sum_criterion(&c, 0.4).unwrap();
        assert!(s.parseval_residual > 0.0);
        assert_relative_eq!(s.tail_lower_bound, s.parseval_residual * 65f64.powf(0.4), max_relative = 1e-15);
    }

    #[test]
    fn integral_criterion_single_terms() {
        assert_relative_eq!(
            besov_integral_criterion(&ChaosCoefficients::single(2, 1.0), 0.5).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-15
        );
        assert_eq!(besov_integral_criterion(&ChaosCoefficients::single(1, 1.0), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn integral_criterion_finite_past_factorial_overflow() {
        let c = synthetic(2_000, 2.0);
        let v = besov_integral_criterion(&c, 0.5).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn theta_range_enforced() {
        let c = ChaosCoefficients::single(1, 1.0);
        for theta in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(besov_sum_criterion(&c, theta).is_err());
            assert!(besov_integral_criterion(&c, theta).is_err());
        }
    }

    #[test]
    fn tail_index_of_power_law() {
        let idx = besov_tail_index(&synthetic(256, 2.0)).unwrap();
        assert!((idx.critical_theta() - 1.0).abs() < 0.05, "{idx:?}");
    }

    #[test]
    fn tail_index_of_finite_chaos() {
        let mut coeffs = vec![0.0; 65];
        coeffs[3] = 1.0;
        let c = ChaosCoefficients::finite(coeffs).unwrap();
        assert_eq!(besov_tail_index(&c).unwrap(), TailIndex::SuperPolynomial);
    }

    #[test]
    fn tail_index_of_indicator() {
        let settings = QuadratureSettings::default();
        let at_the_money = chaos_coefficients(&PayoffSpec::Indicator { strike: 0.0 }, 64, &settings).unwrap();
        let theta = besov_tail_index(&at_the_money).unwrap().critical_theta();
        assert!((theta - 0.5).abs() < 0.05, "{theta}");
        // off the money the coefficients oscillate slowly in n, so the fit
        // needs a longer tail
        let shifted = chaos_coefficients(&PayoffSpec::Indicator { strike: 1.0 }, 512, &settings).unwrap();
        let theta = besov_tail_index(&shifted).unwrap().critical_theta();
        assert!((theta - 0.5).abs() < 0.1, "{theta}");
    }

    #[test]
    fn tail_index_needs_enough_coefficients() {
        // decays slowly but only a few of the upper-half entries are nonzero
        let mut coeffs = vec![0.0; 41];
        for n in [1, 5, 22, 30, 40] {
            coeffs[n] = 0.1;
        }
        let c = ChaosCoefficients::finite(coeffs).unwrap();
        assert!(matches!(besov_tail_index(&c), Err(Error::TooFewCoefficients { .. })));
    }
}
