use crate::hermite_chaos::ChaosCoefficients;
use crate::{Error, Result};

/// Evaluates `E[F | F_t]` and the projected Malliavin derivative factor from
/// the chaos coefficients in one pass of the space-time Hermite recurrence.
#[derive(Debug, Clone)]
pub(crate) struct ChaosSeries {
    coeffs: Vec<f64>,
    sqrt_n: Vec<f64>,
}

impl ChaosSeries {
    pub(crate) fn new(c: &ChaosCoefficients) -> Self {
        let coeffs = c.coeffs().to_vec();
        let sqrt_n = (0..=coeffs.len()).map(|n| (n as f64).sqrt()).collect();
        ChaosSeries { coeffs, sqrt_n }
    }

    /// Returns `(Σ c_n q_n, Σ_{n≥1} c_n √n q_{n−1})` with
    /// `q_n = σ^n He_n(x/σ)/√(n!)`.
    #[inline]
    pub(crate) fn eval(&self, sigma2: f64, x: f64) -> (f64, f64) {
        let c = &self.coeffs;
        let last = c.len() - 1;
        let (mut prev, mut cur) = (0.0, 1.0); // q_{-1}, q_0
        let mut value = c[0];
        let mut factor = 0.0;
        for k in 0..last {
            // cur = q_k
            factor += c[k + 1] * self.sqrt_n[k + 1] * cur;
            let next = (x * cur - self.sqrt_n[k] * sigma2 * prev) / self.sqrt_n[k + 1];
            prev = cur;
            cur = next;
            value += c[k + 1] * cur;
        }
        (value, factor)
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if (0.0..=1.0 + 1e-12).contains(&sigma2) {
        Ok(())
    } else {
        Err(Error::invalid("sigma2", format!("{sigma2} is outside [0, 1]")))
    }
}

/// `E[F | F_t] = Σ c_n σ_t^n He_n(X_t/σ_t)/√(n!)` with `σ_t² = sigma2` and
/// `X_t = x`. At `sigma2 = 0` (and `x = 0`) this is `c_0`.
pub fn conditional_value(c: &ChaosCoefficients, sigma2: f64, x: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(ChaosSeries::new(c).eval(sigma2, x).0)
}

/// The `t`-free factor of `E[D_t F | F_t] = η(t) Σ_{n≥1} c_n √n q_{n−1}(σ_t², X_t)`.
/// At `sigma2 = 0` (and `x = 0`) this is `c_1`.
pub fn projection_factor(c: &ChaosCoefficients, sigma2: f64, x: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    Ok(ChaosSeries::new(c).eval(sigma2, x).1)
}
