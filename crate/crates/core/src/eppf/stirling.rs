//! Generalized Stirling numbers of the first kind `S_σ(n, k)`.

use crate::caps;
use crate::numeric::{ln_factorial, ln_rising, log_add_exp, LN_ZERO};
use crate::{Error, Result};

/// Table of `S_σ(n, k)` for `0 <= k <= n <= n_max`, filled by the
/// triangular recursion `S(n+1, k) = S(n, k-1) + (n - σk) S(n, k)`.
///
/// Rows are computed in linear space (exact for integer values below
/// 2^53) until they approach overflow, then continued in log space.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    sigma: f64,
    linear: Vec<Vec<f64>>,
    ln: Vec<Vec<f64>>,
}

const LINEAR_LIMIT: f64 = 1e290;

impl StirlingTable {
    pub fn new(sigma: f64, n_max: usize) -> Result<Self> {
        if !(sigma < 1.0) || !sigma.is_finite() {
            return Err(Error::arg(format!("σ = {sigma} must be finite and < 1")));
        }
        if n_max > caps::STIRLING_CAP {
            return Err(Error::limit(format!(
                "Stirling table size {n_max} exceeds the cap {}",
                caps::STIRLING_CAP
            )));
        }
        let coef = |n: usize, k: usize| n as f64 - sigma * k as f64;
        let mut linear: Vec<Vec<f64>> = vec![vec![1.0]];
        while linear.len() <= n_max {
            let n = linear.len() - 1;
            let prev = &linear[n];
            let row: Vec<f64> = (0..n + 2)
                .map(|k| match k {
                    0 => 0.0,
                    _ if k <= n => prev[k - 1] + coef(n, k) * prev[k],
                    _ => prev[k - 1],
                })
                .collect();
            if row.iter().any(|&v| v > LINEAR_LIMIT) {
                break;
            }
            linear.push(row);
        }
        let mut ln: Vec<Vec<f64>> = linear
            .iter()
            .map(|row| row.iter().map(|&v| if v > 0.0 { v.ln() } else { LN_ZERO }).collect())
            .collect();
        for n in ln.len() - 1..n_max {
            let prev = &ln[n];
            let mut row = vec![LN_ZERO; n + 2];
            for (k, slot) in row.iter_mut().enumerate().skip(1) {
                let from_new = prev[k - 1];
                let from_old = if k <= n {
                    prev[k] + coef(n, k).ln()
                } else {
                    LN_ZERO
                };
                *slot = log_add_exp(from_new, from_old);
            }
            ln.push(row);
        }
        Ok(Self { sigma, linear, ln })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_max(&self) -> usize {
        self.ln.len() - 1
    }

    /// `ln S_σ(n, k)`; `-inf` for `k > n`.
    pub fn ln_get(&self, n: usize, k: usize) -> Result<f64> {
        if n > self.n_max() {
            return Err(Error::limit(format!(
                "S_σ({n}, ·) is beyond the table (n_max = {})",
                self.n_max()
            )));
        }
        Ok(if k > n { LN_ZERO } else { self.ln[n][k] })
    }

    pub fn get(&self, n: usize, k: usize) -> Result<f64> {
        let ln = self.ln_get(n, k)?;
        Ok(match self.linear.get(n) {
            Some(row) if k <= n => row[k],
            _ => ln.exp(),
        })
    }
}

/// `S_σ(n, k)` by recursion. Returns 0 for `k > n`.
pub fn stirling_sigma(sigma: f64, n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Ok(0.0);
    }
    StirlingTable::new(sigma, n)?.get(n, k)
}

/// `S_σ(n, k)` straight from its definition as a sum over block-size
/// multiplicities `λ` with `Σ jλ_j = n` and `Σ λ_j = k`:
/// `Σ_λ n! / Π λ_j! (j!)^{λ_j} · Π [(1-σ)_{j-1}]^{λ_j}`.
/// Exponential in `n`; used for cross-checking the recursion.
pub fn stirling_by_definition(sigma: f64, n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut lambda = vec![0usize; n + 1];
    multiplicities(n, k, n, &mut lambda, &mut |lam| {
        let mut ln_term = ln_factorial(n);
        for (j, &l) in lam.iter().enumerate().skip(1) {
            if l == 0 {
                continue;
            }
            ln_term -= ln_factorial(l) + l as f64 * ln_factorial(j);
            ln_term += l as f64 * ln_rising(1.0 - sigma, j - 1);
        }
        total += ln_term.exp();
    });
    total
}

/// Visits every multiplicity vector `λ` (indexed by part size) of integer
/// partitions of `rem` into `parts` parts each at most `max_part`.
fn multiplicities(
    rem: usize,
    parts: usize,
    max_part: usize,
    lambda: &mut [usize],
    visit: &mut dyn FnMut(&[usize]),
) {
    if parts == 0 {
        if rem == 0 {
            visit(lambda);
        }
        return;
    }
    if rem < parts || rem > parts * max_part {
        return;
    }
    let top = max_part.min(rem - (parts - 1));
    for j in (1..=top).rev() {
        lambda[j] += 1;
        multiplicities(rem - j, parts - 1, j, lambda, visit);
        lambda[j] -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_one() {
        for &s in &[-0.5, 0.0, 0.3, 0.9] {
            let t = StirlingTable::new(s, 10).unwrap();
            for n in 0..=10 {
                assert!((t.get(n, n).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_entries() {
        let t = StirlingTable::new(0.5, 6).unwrap();
        assert_eq!(t.get(0, 0).unwrap(), 1.0);
        for n in 1..=6 {
            assert_eq!(t.get(n, 0).unwrap(), 0.0);
            assert_eq!(t.get(n, n + 1).unwrap(), 0.0);
        }
        assert!(matches!(t.get(7, 1), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn worked_values() {
        // One profile (a 2-block and a 1-block), coefficient 3, weight (1-σ).
        assert!((stirling_sigma(0.5, 3, 2).unwrap() - 1.5).abs() < 1e-12);
        assert!((stirling_sigma(0.0, 4, 2).unwrap() - 11.0).abs() < 1e-12);
        assert_eq!(stirling_sigma(0.5, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn definition_small_cases() {
        assert!((stirling_by_definition(0.5, 3, 2) - 1.5).abs() < 1e-12);
        assert!((stirling_by_definition(0.0, 4, 2) - 11.0).abs() < 1e-12);
        assert_eq!(stirling_by_definition(0.2, 0, 0), 1.0);
    }

    #[test]
    fn rejects_sigma_at_least_one() {
        assert!(StirlingTable::new(1.0, 3).is_err());
    }

    #[test]
    fn sigma_zero_is_exact_first_kind() {
        let t = StirlingTable::new(0.0, 10).unwrap();
        assert_eq!(t.get(10, 1).unwrap(), 362_880.0);
        assert_eq!(t.get(10, 2).unwrap(), 1_026_576.0);
        assert_eq!(t.get(5, 3).unwrap(), 35.0);
    }

    #[test]
    fn log_continuation_past_overflow() {
        let t = StirlingTable::new(0.0, 400).unwrap();
        // S_0(n, 1) = (n-1)!
        for n in [150, 200, 400] {
            let rel = (t.ln_get(n, 1).unwrap() - ln_factorial(n - 1)).abs() / ln_factorial(n - 1);
            assert!(rel < 1e-12, "n={n}");
            assert!(t.ln_get(n, n).unwrap().abs() < 1e-9);
        }
    }
}
