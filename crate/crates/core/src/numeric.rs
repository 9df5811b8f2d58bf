//! Log-space arithmetic. A probability of exactly zero is `f64::NEG_INFINITY`.

use statrs::function::gamma::ln_gamma;

pub const LN_ZERO: f64 = f64::NEG_INFINITY;

#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == LN_ZERO {
        return b;
    }
    if b == LN_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(LN_ZERO, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// `ln((x)_n)` for the rising factorial `x (x+1) ... (x+n-1)`, `x > 0`.
pub fn ln_rising(x: f64, n: usize) -> f64 {
    debug_assert!(x > 0.0);
    if n == 0 {
        return 0.0;
    }
    if n <= 32 {
        (0..n).map(|i| (x + i as f64).ln()).sum()
    } else {
        ln_gamma(x + n as f64) - ln_gamma(x)
    }
}

pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else if n <= 32 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Riemann zeta for `s > 1`: a direct partial sum plus an Euler-Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    debug_assert!(s > 1.0);
    const N: usize = 64;
    let head: f64 = (1..N).map(|j| (j as f64).powf(-s)).sum();
    let n = N as f64;
    // Tail from N: integral + half endpoint + Bernoulli corrections B2, B4, B6.
    let t0 = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let d1 = s * n.powf(-s - 1.0) / 12.0;
    let d3 = s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    let d5 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0;
    head + t0 + d1 - d3 + d5
}

/// Clamps round-off below zero (down to `-1e-14`) to zero; larger negatives
/// pass through so callers can surface them.
#[inline]
pub fn clamp_roundoff(x: f64) -> f64 {
    if (-1e-14..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}
