/// Probabilists' Hermite polynomial `He_n(x)` by the three-term recurrence
/// `He_{n+1} = x He_n − n He_{n−1}`.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_n(x) / √(n!)`, computed with the scaled recurrence so it stays finite
/// far beyond the range where `n!` overflows.
pub fn normalized_hermite_eval(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = He_k(x)/√(k!)` for `k = 0..=n_max`.
pub fn normalized_hermite_all(n_max: usize, x: f64, out: &mut Vec<f64>) {
    scaled_hermite_all(n_max, 1.0, x, out)
}

/// Fills `out[k] = σ^k He_k(x/σ)/√(k!)` for `k = 0..=n_max`, with
/// `sigma2 = σ²`.
///
/// This is the space-time form of the Hermite polynomials; the recurrence
/// `q_{k+1} = (x q_k − √k σ² q_{k−1})/√(k+1)` has no division by `σ`, so
/// `sigma2 = 0` yields `x^k/√(k!)`.
pub fn scaled_hermite_all(n_max: usize, sigma2: f64, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return;
    }
    out.push(x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = (x * out[k] - kf.sqrt() * sigma2 * out[k - 1]) / (kf + 1.0).sqrt();
        out.push(next);
    }
}
