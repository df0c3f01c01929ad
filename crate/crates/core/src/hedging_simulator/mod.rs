//! Monte Carlo of the discrete hedge.
//!
//! `η` is deterministic, so on each interval the pair
//! `(ΔW, ∫ η dW)` is exactly bivariate normal with closed-form covariance.
//! Sampling it through a 2×2 Cholesky factor leaves Monte Carlo noise as the
//! only error, including on the singular last interval.

mod rng;
mod series;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rng::PathStream;
pub use series::{conditional_value, projection_factor};

use crate::hermite_chaos::{ChaosCoefficients, PayoffSpec};
use crate::singular_model::{SingularVolatility, TimeNet};
use crate::{Error, Result};
use series::ChaosSeries;

/// Paths per work unit. Fixed so that reductions do not depend on how many
/// workers run.
const CHUNK_PATHS: u64 = 1024;

/// One realisation over a net: Brownian increments and `η`-weighted
/// increments per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub dw: Vec<f64>,
    pub y: Vec<f64>,
}

impl PathSample {
    /// `X_{t_i} = Σ_{j≤i} Y_j`, with `X_{t_0} = 0`.
    pub fn x_at(&self, i: usize) -> f64 {
        self.y[..i].iter().sum()
    }

    pub fn x_terminal(&self) -> f64 {
        self.y.iter().sum()
    }
}

/// Lower Cholesky factor of the covariance of `(ΔW, Y)` on one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalFactor {
    pub l11: f64,
    pub l21: f64,
    pub l22: f64,
}

impl IntervalFactor {
    pub fn new(model: &SingularVolatility, a: f64, b: f64) -> Result<Self> {
        let l11 = (b - a).sqrt();
        let l21 = model.eta_integral(a, b)? / l11;
        let schur = model.conditional_variance(a, b)?;
        if !(schur >= 0.0 && l21.is_finite()) {
            return Err(Error::CholeskyFailure { a, b, schur });
        }
        Ok(IntervalFactor { l11, l21, l22: schur.sqrt() })
    }

    #[inline]
    pub fn apply(&self, z1: f64, z2: f64) -> (f64, f64) {
        (self.l11 * z1, self.l21 * z1 + self.l22 * z2)
    }
}

/// Draws one path on `net`, consuming one normal pair per interval.
pub fn sample_path(net: &TimeNet, model: &SingularVolatility, stream: &mut PathStream) -> Result<PathSample> {
    let mut dw = Vec::with_capacity(net.len());
    let mut y = Vec::with_capacity(net.len());
    for (a, b) in net.intervals() {
        let (z1, z2) = stream.normal_pair();
        let (w, v) = IntervalFactor::new(model, a, b)?.apply(z1, z2);
        dw.push(w);
        y.push(v);
    }
    Ok(PathSample { dw, y })
}

#[derive(Debug, Clone, Copy)]
struct Step {
    sigma2_left: f64,
    /// `∫_a^b η / (b − a)`
    eta_mean: f64,
    factor: IntervalFactor,
}

/// The discrete hedge of `F` on a fixed net, with everything that does not
/// depend on the path precomputed.
#[derive(Debug, Clone)]
pub struct Hedger {
    series: ChaosSeries,
    mean: f64,
    steps: Vec<Step>,
    payoff: Option<PayoffSpec>,
}

impl Hedger {
    /// With `payoff = None` the terminal value is the truncated series,
    /// otherwise `g(X_T)` is evaluated directly.
    pub fn new(
        c: &ChaosCoefficients,
        model: &SingularVolatility,
        net: &TimeNet,
        payoff: Option<&PayoffSpec>,
    ) -> Result<Self> {
        if (net.horizon() - model.horizon()).abs() > 1e-12 * model.horizon() {
            return Err(Error::invalid("net", "net horizon differs from the model horizon"));
        }
        if let Some(p) = payoff {
            p.validate()?;
        }
        let steps = net
            .intervals()
            .map(|(a, b)| {
                Ok(Step {
                    sigma2_left: model.sigma2(a)?,
                    eta_mean: model.eta_integral(a, b)? / (b - a),
                    factor: IntervalFactor::new(model, a, b)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Hedger { series: ChaosSeries::new(c), mean: c.get(0), steps, payoff: payoff.cloned() })
    }

    fn terminal(&self, x: f64) -> f64 {
        match &self.payoff {
            Some(p) => p.evaluate(x),
            None => self.series.eval(1.0, x).0,
        }
    }

    /// `g(X_T) − c_0 − Σ_i ν_i ΔW_i` for a stored path.
    pub fn error(&self, path: &PathSample) -> f64 {
        let mut x = 0.0;
        let mut hedge = 0.0;
        for (step, (dw, y)) in self.steps.iter().zip(path.dw.iter().zip(&path.y)) {
            let nu = self.series.eval(step.sigma2_left, x).1 * step.eta_mean;
            hedge += nu * dw;
            x += y;
        }
        self.terminal(x) - self.mean - hedge
    }

    /// Same as [`Hedger::error`] on the path drawn from `stream`, without
    /// materialising it.
    fn error_from_stream(&self, stream: &mut PathStream) -> f64 {
        let mut x = 0.0;
        let mut hedge = 0.0;
        for step in &self.steps {
            let (z1, z2) = stream.normal_pair();
            let (dw, y) = step.factor.apply(z1, z2);
            let nu = self.series.eval(step.sigma2_left, x).1 * step.eta_mean;
            hedge += nu * dw;
            x += y;
        }
        self.terminal(x) - self.mean - hedge
    }
}

/// `ν_i = projection_factor(σ²_{t_{i−1}}, X_{t_{i−1}}) · ∫_{t_{i−1}}^{t_i} η / (t_i − t_{i−1})`,
/// the interval average of `E[(ᵖDF)_s | F_{t_{i−1}}]`. `interval` is
/// zero-based.
pub fn strategy_nu(
    c: &ChaosCoefficients,
    model: &SingularVolatility,
    net: &TimeNet,
    interval: usize,
    x_left: f64,
) -> Result<f64> {
    if interval >= net.len() {
        return Err(Error::invalid("interval", format!("{interval} out of range for {} intervals", net.len())));
    }
    let (a, b) = (net.times()[interval], net.times()[interval + 1]);
    let factor = projection_factor(c, model.sigma2(a)?, x_left)?;
    Ok(factor * model.eta_integral(a, b)? / (b - a))
}

/// One realisation of the hedging error.
pub fn hedging_error_sample(
    c: &ChaosCoefficients,
    model: &SingularVolatility,
    net: &TimeNet,
    payoff: Option<&PayoffSpec>,
    path: &PathSample,
) -> Result<f64> {
    if path.dw.len() != net.len() || path.y.len() != net.len() {
        return Err(Error::invalid("path", "path length does not match the net"));
    }
    Ok(Hedger::new(c, model, net, payoff)?.error(path))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
}

/// Mean and L₂ norm of the hedging error from one batch of paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// `E[error]` with its standard error.
    pub mean_error: McEstimate,
    /// `E[error²]` with its standard error.
    pub second_moment: McEstimate,
    /// `√E[error²]` with a delta-method standard error.
    pub l2: McEstimate,
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    s1: Compensated,
    s2: Compensated,
    s4: Compensated,
}

impl Moments {
    fn push(&mut self, e: f64) {
        let sq = e * e;
        self.s1.add(e);
        self.s2.add(sq);
        self.s4.add(sq * sq);
    }

    fn merge(&mut self, other: &Moments) {
        for (mine, theirs) in [(&mut self.s1, &other.s1), (&mut self.s2, &other.s2), (&mut self.s4, &other.s4)] {
            mine.add(theirs.value());
        }
    }
}

/// Runs `sample(path_index)` for every path in fixed-size chunks and merges
/// the chunk moments in index order.
fn accumulate<F>(n_paths: u64, sample: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = n_paths.div_ceil(CHUNK_PATHS);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut m = Moments::default();
            let end = ((chunk + 1) * CHUNK_PATHS).min(n_paths);
            for path in chunk * CHUNK_PATHS..end {
                m.push(sample(path));
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    total
}

fn stats(m: &Moments, n_paths: u64, seed: u64) -> ErrorStats {
    let n = n_paths as f64;
    let mean = m.s1.value() / n;
    let m2 = m.s2.value() / n;
    let m4 = m.s4.value() / n;
    let var_e = ((m2 - mean * mean) * n / (n - 1.0)).max(0.0);
    let var_sq = ((m4 - m2 * m2) * n / (n - 1.0)).max(0.0);
    let se_m2 = (var_sq / n).sqrt();
    let l2 = m2.sqrt();
    let se_l2 = if l2 > 0.0 { se_m2 / (2.0 * l2) } else { 0.0 };
    let est = |mean, std_error| McEstimate { mean, std_error, n_paths, seed };
    ErrorStats { mean_error: est(mean, (var_e / n).sqrt()), second_moment: est(m2, se_m2), l2: est(l2, se_l2) }
}

fn check_paths(n_paths: u64) -> Result<()> {
    if n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    Ok(())
}

/// Simulates the hedge on `n_paths` paths. Results depend only on
/// `(seed, n_paths, configuration)`, never on the worker count.
pub fn mc_error_stats(
    c: &ChaosCoefficients,
    model: &SingularVolatility,
    net: &TimeNet,
    payoff: Option<&PayoffSpec>,
    n_paths: u64,
    seed: u64,
) -> Result<ErrorStats> {
    check_paths(n_paths)?;
    let hedger = Hedger::new(c, model, net, payoff)?;
    let moments = accumulate(n_paths, |path| hedger.error_from_stream(&mut PathStream::new(seed, path)));
    Ok(stats(&moments, n_paths, seed))
}

/// `‖F − EF − Σ ν_i ΔW_i‖_{L₂}` by Monte Carlo.
pub fn mc_l2_error(
    c: &ChaosCoefficients,
    model: &SingularVolatility,
    net: &TimeNet,
    payoff: Option<&PayoffSpec>,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_error_stats(c, model, net, payoff, n_paths, seed)?.l2)
}

/// `E[Δ(a, b)²]` simulated from the definition
/// `Δ = E[F|F_b] − E[F|F_a] − (W_b − W_a)/(b − a) ∫_a^b E[(ᵖDF)_s | F_a] ds`,
/// with both conditional expectations taken from the truncated series.
pub fn delta_interval_moment(
    c: &ChaosCoefficients,
    model: &SingularVolatility,
    a: f64,
    b: f64,
    n_paths: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_paths(n_paths)?;
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    let series = ChaosSeries::new(c);
    let sigma2_a = model.sigma2(a)?;
    let sigma2_b = model.sigma2(b)?.min(1.0);
    let eta_mean = model.eta_integral(a, b)? / (b - a);
    let factor = IntervalFactor::new(model, a, b)?;
    let sd_a = sigma2_a.sqrt();
    let moments = accumulate(n_paths, |path| {
        let mut stream = PathStream::new(seed, path);
        let (z0, _) = stream.normal_pair();
        let (z1, z2) = stream.normal_pair();
        let x_a = sd_a * z0;
        let (dw, y) = factor.apply(z1, z2);
        let (v_a, f_a) = series.eval(sigma2_a, x_a);
        let (v_b, _) = series.eval(sigma2_b, x_a + y);
        let delta = v_b - v_a - dw * f_a * eta_mean;
        delta * delta
    });
    let n = n_paths as f64;
    let mean = moments.s1.value() / n;
    let var = ((moments.s2.value() / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), n_paths, seed })
}
