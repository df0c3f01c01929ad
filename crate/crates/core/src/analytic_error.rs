//! Mean-square hedging error from the chaos expansion.
//!
//! On an interval `[a, b]` the one-step error `Δ(a, b)` has second moment
//! `A + B`:
//!
//! * `A = Σ_{n≥1} n c_n² σ_a^{2(n−1)} · Ã(a, b)`, where `Ã` is the mean
//!   squared variation of `η` inside the interval;
//! * `B = Σ_{n≥2} c_n² [σ_b^{2n} − σ_a^{2n} − n σ_a^{2(n−1)}(σ_b² − σ_a²)]`,
//!   the information gained between `a` and `b`.
//!
//! Interval errors are martingale increments, so the net error is the root
//! of their sum. Times enter only through `t/T`.

use serde::{Deserialize, Serialize};

use crate::hermite_chaos::ChaosCoefficients;
use crate::singular_model::{SingularVolatility, TimeNet};
use crate::{Error, Result};

/// Relative residual above which a result is flagged as truncation-limited.
pub const RESIDUAL_FLAG_RATIO: f64 = 1e-6;

/// Below this relative interval length `Ã` is evaluated from its Taylor
/// series instead of the closed form, which cancels catastrophically.
const SERIES_SWITCH: f64 = 1e-2;
const SERIES_TERMS: usize = 12;

/// `(β / (2(b−a))) ∫_a^b ∫_a^b ((1−u)^{(β−1)/2} − (1−v)^{(β−1)/2})² du dv`
/// in normalised time, i.e. the `A` factor of a pure first-chaos payoff.
///
/// Closed form:
/// `(1−a)^β − (1−b)^β − (β/(b−a)) (4/(β+1)²) [(1−a)^{(β+1)/2} − (1−b)^{(β+1)/2}]²`.
pub fn a_double_integral(model: &SingularVolatility, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    model.cumvar(a, b)?;
    let beta = model.beta();
    if beta == 1.0 {
        return Ok(0.0);
    }
    let (u, v) = (a / model.horizon(), b / model.horizon());
    let rel = (v - u) / (1.0 - u);
    if rel < SERIES_SWITCH {
        return Ok(a_double_integral_series(beta, u, v));
    }
    let p = (beta + 1.0) / 2.0;
    let lead = (1.0 - u).powf(beta) - (1.0 - v).powf(beta);
    let diff = (1.0 - u).powf(p) - (1.0 - v).max(0.0).powf(p);
    let value = lead - beta / (v - u) * 4.0 / ((beta + 1.0) * (beta + 1.0)) * diff * diff;
    Ok(value.max(0.0))
}

// β h Var_w[f(u + h w)] with f(s) = (1−s)^γ, γ = (β−1)/2, w ~ U[0, 1].
// Writing f(u + h w) = x^γ Σ_k a_k w^k with a_k = C(γ, k)(−r)^k, r = h/x,
// the variance is Σ_{j,k≥1} a_j a_k (1/(j+k+1) − 1/((j+1)(k+1))).
fn a_double_integral_series(beta: f64, u: f64, v: f64) -> f64 {
    let gamma = (beta - 1.0) / 2.0;
    let x = 1.0 - u;
    let h = v - u;
    let r = h / x;
    let mut coef = [0.0; SERIES_TERMS + 1];
    coef[0] = 1.0;
    for k in 1..=SERIES_TERMS {
        coef[k] = coef[k - 1] * (gamma - (k as f64 - 1.0)) / k as f64 * (-r);
    }
    let mut var = 0.0;
    for j in (1..=SERIES_TERMS).rev() {
        for k in (1..=SERIES_TERMS).rev() {
            let (jf, kf) = (j as f64, k as f64);
            var += coef[j] * coef[k] * (1.0 / (jf + kf + 1.0) - 1.0 / ((jf + 1.0) * (kf + 1.0)));
        }
    }
    (beta * h * x.powf(2.0 * gamma) * var).max(0.0)
}

/// A series value together with a bound on what truncation left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub value: f64,
    pub truncation_residual: f64,
}

fn check_open_interval(model: &SingularVolatility, a: f64, b: f64) -> Result<()> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    model.cumvar(a, b).map(|_| ())
}

// sup_{n > N} n y^{n−1}, the largest A-weight a neglected chaos can carry.
fn sup_tail_weight(y: f64, truncation: usize) -> f64 {
    let first = (truncation + 1) as f64;
    if y <= 0.0 {
        return if truncation == 0 { 1.0 } else { 0.0 };
    }
    let peak = -1.0 / y.ln();
    let weight = |n: f64| n * y.powf(n - 1.0);
    if first >= peak {
        weight(first)
    } else {
        weight(peak.floor().max(first)).max(weight(peak.ceil()))
    }
}

pub fn a_term(c: &ChaosCoefficients, model: &SingularVolatility, a: f64, b: f64) -> Result<SeriesTerm> {
    check_open_interval(model, a, b)?;
    let y = model.sigma2(a)?;
    let variation = a_double_integral(model, a, b)?;
    Ok(a_term_parts(c, y, variation))
}

fn a_term_parts(c: &ChaosCoefficients, y: f64, variation: f64) -> SeriesTerm {
    // Σ_{n≥1} n c_n² y^{n−1}, Horner from the top
    let coeffs = c.coeffs();
    let mut weight_sum = 0.0;
    for n in (1..coeffs.len()).rev() {
        weight_sum = weight_sum * y + n as f64 * coeffs[n] * coeffs[n];
    }
    let residual = c.parseval_residual() * sup_tail_weight(y, c.truncation_order()) * variation;
    SeriesTerm { value: weight_sum * variation, truncation_residual: residual }
}

pub fn b_term(c: &ChaosCoefficients, model: &SingularVolatility, a: f64, b: f64) -> Result<SeriesTerm> {
    check_open_interval(model, a, b)?;
    let y = model.sigma2(a)?;
    let d = model.cumvar(a, b)?;
    Ok(b_term_parts(c, y, d))
}

// x^n − y^n − n y^{n−1} d = d² U_n with S_{n+1} = x S_n + y^n (S_n = (x^n − y^n)/d)
// and U_{n+1} = y U_n + S_n; every quantity is a sum of non-negative terms.
fn b_term_parts(c: &ChaosCoefficients, y: f64, d: f64) -> SeriesTerm {
    let x = y + d;
    let coeffs = c.coeffs();
    let (mut s, mut u, mut y_pow) = (1.0, 0.0, 1.0); // S_1, U_1, y^0
    let mut total = 0.0;
    for cn in coeffs.iter().skip(2) {
        u = y * u + s;
        y_pow *= y;
        s = x * s + y_pow;
        total += cn * cn * u;
    }
    let residual = c.parseval_residual() * x.min(1.0).powi(c.truncation_order() as i32 + 1);
    SeriesTerm { value: total * d * d, truncation_residual: residual }
}

/// Second moment of the one-step hedging error on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalError {
    pub a: f64,
    pub b: f64,
    pub a_term: f64,
    pub b_term: f64,
    pub truncation_residual: f64,
}

impl IntervalError {
    pub fn total(&self) -> f64 {
        self.a_term + self.b_term
    }
}

pub fn interval_error(c: &ChaosCoefficients, model: &SingularVolatility, a: f64, b: f64) -> Result<IntervalError> {
    check_open_interval(model, a, b)?;
    let y = model.sigma2(a)?;
    let d = model.cumvar(a, b)?;
    let at = a_term_parts(c, y, a_double_integral(model, a, b)?);
    let bt = b_term_parts(c, y, d);
    Ok(IntervalError {
        a,
        b,
        a_term: at.value,
        b_term: bt.value,
        truncation_residual: at.truncation_residual + bt.truncation_residual,
    })
}

/// Hedging error over a whole net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetError {
    pub intervals: Vec<IntervalError>,
    /// `Σ_i (A + B)` over the retained chaos.
    pub series_sq: f64,
    /// `‖g‖² − Σ_{n≤N} c_n²`: chaos the truncated strategy never hedges.
    pub unhedged_sq: f64,
    /// Bound on the retained-series error contributed by chaos beyond `N`.
    pub truncation_residual: f64,
}

impl NetError {
    /// L₂ error of the truncated strategy against the exact payoff,
    /// `√(Σ(A+B) + unhedged)`. This is what the simulator measures when it
    /// evaluates `g(X_T)` directly.
    pub fn value(&self) -> f64 {
        (self.series_sq + self.unhedged_sq).sqrt()
    }

    /// `√Σ(A+B)`: the error against the truncated payoff `Σ_{n≤N} c_n He_n/√n!`.
    pub fn series_value(&self) -> f64 {
        self.series_sq.sqrt()
    }

    pub fn is_flagged(&self) -> bool {
        self.truncation_residual > RESIDUAL_FLAG_RATIO * (self.series_sq + self.unhedged_sq)
    }
}

pub fn net_error_l2(c: &ChaosCoefficients, model: &SingularVolatility, net: &TimeNet) -> Result<NetError> {
    if (net.horizon() - model.horizon()).abs() > 1e-12 * model.horizon() {
        return Err(Error::invalid("net", "net horizon differs from the model horizon"));
    }
    let intervals = net.intervals().map(|(a, b)| interval_error(c, model, a, b)).collect::<Result<Vec<_>>>()?;
    let series_sq = pairwise_sum(&intervals.iter().map(IntervalError::total).collect::<Vec<_>>());
    let truncation_residual = intervals.iter().map(|e| e.truncation_residual).sum();
    Ok(NetError { intervals, series_sq, unhedged_sq: c.parseval_residual(), truncation_residual })
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

const ZETA_TERMS: u32 = 1_000_000;

/// Riemann zeta for real `s > 1`: direct sum to `10⁶` plus an
/// Euler–Maclaurin tail.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::invalid("s", format!("zeta needs s > 1, got {s}")));
    }
    let k = ZETA_TERMS as f64;
    let head: f64 = (1..ZETA_TERMS).rev().map(|j| (j as f64).powf(-s)).sum();
    let tail = k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s) + s * k.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * k.powf(-s - 3.0) / 720.0;
    Ok(head + tail)
}

/// `((1−β)/(1+β))² + β|β−1| ζ(2−β)`, the constant multiplying `N^{−β}` in
/// the bound on the summed `A` terms.
pub fn a_sum_constant(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", format!("the A-term constant needs beta in (0, 1), got {beta}")));
    }
    let ratio = (1.0 - beta) / (1.0 + beta);
    Ok(ratio * ratio + beta * (1.0 - beta) * zeta(2.0 - beta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundConstant {
    /// An empirically fitted `c₂`.
    Fitted { c2: f64 },
    /// `√(a_sum_constant(β))`, the A-part constant per unit of
    /// `Σ c_n² n^θ`.
    ClosedForm,
}

/// `c₂ n^{−βθ/2}`.
pub fn rate_bound(model: &SingularVolatility, theta: f64, n: usize, constant: BoundConstant) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", format!("{theta} is outside (0, 1]")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "need at least one interval"));
    }
    let c2 = match constant {
        BoundConstant::Fitted { c2 } => c2,
        BoundConstant::ClosedForm => a_sum_constant(model.beta())?.sqrt(),
    };
    Ok(c2 * (n as f64).powf(-model.beta() * theta / 2.0))
}

/// Exponent `−βθ/2` of the rate.
pub fn theoretical_slope(model: &SingularVolatility, theta: f64) -> f64 {
    -model.beta() * theta / 2.0
}
