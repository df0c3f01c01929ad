//! The power-law volatility `η(t) = √β T^{−β/2} (T − t)^{(β−1)/2}` and time
//! nets.
//!
//! `η` is normalised so that `∫₀ᵀ η² = 1`; it blows up at `t = T` for
//! `β < 1`. Everything downstream works with interval integrals of `η` and
//! `η²`, which stay finite up to and including `T`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SCHUR_NODES: NonZeroUsize = NonZeroUsize::new(24).unwrap();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularVolatility {
    beta: f64,
    horizon: f64,
}

impl SingularVolatility {
    pub fn new(beta: f64, horizon: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid("beta", format!("{beta} is outside (0, 1]")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("{horizon} must be positive and finite")));
        }
        Ok(SingularVolatility { beta, horizon })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Singularity exponent `α = (1 − β)/2`, so that `η ~ (T − t)^{−α}`.
    pub fn alpha(&self) -> f64 {
        (1.0 - self.beta) / 2.0
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::invalid("t", format!("{t} is outside [0, {})", self.horizon)));
        }
        let b = self.beta;
        Ok((self.horizon - t).powf((b - 1.0) / 2.0) * self.horizon.powf(-b / 2.0) * b.sqrt())
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        if !(a >= 0.0 && a <= b && b <= self.horizon) {
            return Err(Error::invalid(
                "interval",
                format!("[{a}, {b}] is not an ordered subinterval of [0, {}]", self.horizon),
            ));
        }
        Ok(())
    }

    /// `(1 − t/T)^β`, the variance of `W(η)` still to come after `t`.
    pub(crate) fn remaining_variance(&self, t: f64) -> f64 {
        (1.0 - t / self.horizon).max(0.0).powf(self.beta)
    }

    /// `σ_t² = ∫₀ᵗ η²`.
    pub fn sigma2(&self, t: f64) -> Result<f64> {
        self.cumvar(0.0, t)
    }

    /// `∫_a^b η(t)² dt = (1 − a/T)^β − (1 − b/T)^β`.
    pub fn cumvar(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        Ok((self.remaining_variance(a) - self.remaining_variance(b)).max(0.0))
    }

    /// `∫_a^b η(t) dt = √β T^{−β/2} (2/(β+1)) [(T−a)^{(β+1)/2} − (T−b)^{(β+1)/2}]`.
    pub fn eta_integral(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        let (beta, t) = (self.beta, self.horizon);
        let p = (beta + 1.0) / 2.0;
        let primitive = (t - a).powf(p) - (t - b).max(0.0).powf(p);
        Ok(beta.sqrt() * t.powf(-beta / 2.0) * (2.0 / (beta + 1.0)) * primitive.max(0.0))
    }

    /// `∫_a^b η² − (∫_a^b η)²/(b − a)`, the variance of `∫_a^b η dW` left
    /// after conditioning on `W_b − W_a`.
    ///
    /// Away from `T` the closed form cancels catastrophically, so there the
    /// equivalent `(1/2h) ∫∫ (η(s) − η(t))² ds dt` is integrated instead.
    pub fn conditional_variance(&self, a: f64, b: f64) -> Result<f64> {
        self.check_interval(a, b)?;
        let h = b - a;
        if h == 0.0 || self.beta == 1.0 {
            return Ok(0.0);
        }
        let (u0, u1) = (self.horizon - b, self.horizon - a);
        if u0 <= 0.5 * u1 {
            let cov = self.eta_integral(a, b)?;
            return Ok((self.cumvar(a, b)? - cov * cov / h).max(0.0));
        }
        let gamma = (self.beta - 1.0) / 2.0;
        let half = 0.5 * h;
        let mid = 0.5 * (u0 + u1);
        let nodes: Vec<(f64, f64)> = GaussLegendre::new(SCHUR_NODES)
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| ((mid + half * x).powf(gamma), w * half))
            .collect();
        let mut total = 0.0;
        for (i, &(ei, wi)) in nodes.iter().enumerate() {
            for &(ej, wj) in &nodes[..i] {
                total += wi * wj * (ei - ej) * (ei - ej);
            }
        }
        let scale = self.beta * self.horizon.powf(-self.beta);
        Ok(scale * total / h)
    }
}

/// Rebalancing dates `0 = t_0 < t_1 < … < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeNet {
    times: Vec<f64>,
}

impl TimeNet {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("times", "a net needs at least two points"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("times", "the first point must be exactly 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times", "points must be finite and strictly increasing"));
        }
        Ok(TimeNet { times })
    }

    /// `t_i = iT/n`.
    pub fn equidistant(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "an equidistant net needs at least one interval"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        let mut times: Vec<f64> = (0..n).map(|i| i as f64 * horizon / n as f64).collect();
        times.push(horizon);
        Ok(TimeNet { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn mesh(&self) -> f64 {
        self.intervals().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Inserts the midpoint of interval `i`.
    pub fn split(&self, i: usize) -> Self {
        let mut times = self.times.clone();
        let mid = 0.5 * (times[i] + times[i + 1]);
        times.insert(i + 1, mid);
        TimeNet { times }
    }
}

/// `sup_i (τ_i − τ_{i−1}) / (1 − τ_{i−1})^{1−θ}` over the transformed points
/// `τ_i = 1 − (1 − t_i/T)^β`, in normalised time.
pub fn transformed_net_mesh_stat(net: &TimeNet, model: &SingularVolatility, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", format!("{theta} is outside (0, 1]")));
    }
    if (net.horizon() - model.horizon()).abs() > 1e-12 * model.horizon() {
        return Err(Error::invalid("net", "net horizon differs from the model horizon"));
    }
    let tau: Vec<f64> = net.times().iter().map(|&t| 1.0 - model.remaining_variance(t)).collect();
    Ok(tau.windows(2).map(|w| (w[1] - w[0]) / (1.0 - w[0]).powf(1.0 - theta)).fold(0.0, f64::max))
}
