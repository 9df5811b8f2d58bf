//! Gibbs-type weights `V_{n,k}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PitmanYor;
use crate::numeric::LN_ZERO;
use crate::{Error, Result};

/// Relative tolerance on the backward recursion
/// `(n - σk) V_{n+1,k} + V_{n+1,k+1} = V_{n,k}`.
pub const RECURSION_TOLERANCE: f64 = 1e-10;

/// `ln V_{n,k}` for `1 <= k <= n <= n_max`; zeros are `-inf`.
#[derive(Debug, Clone)]
pub struct VTable {
    sigma: f64,
    // ln_v[n - 1][k - 1]
    ln_v: Vec<Vec<f64>>,
}

/// Worst violation of the V-recursion found by [`VTable::recursion_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionResidual {
    pub n: usize,
    pub k: usize,
    /// `|(n - σk) V_{n+1,k} + V_{n+1,k+1} - V_{n,k}| / V_{n,k}`
    pub relative: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    n: usize,
    k: usize,
    log_v: f64,
}

impl VTable {
    /// Builds a validated table from `(n, k, ln V_{n,k})` triples.
    pub fn from_entries(
        sigma: f64,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let table = Self::from_entries_unchecked(sigma, entries)?;
        table.validate()?;
        Ok(table)
    }

    /// Builds a table checking only its shape (every `1 <= k <= n <= n_max`
    /// present exactly once), not `V_{1,1}` or the recursion.
    pub fn from_entries_unchecked(
        sigma: f64,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if !(sigma < 1.0) || !sigma.is_finite() {
            return Err(Error::model(format!("Gibbs σ = {sigma} must be < 1")));
        }
        let entries: Vec<(usize, usize, f64)> = entries.into_iter().collect();
        let n_max = entries.iter().map(|e| e.0).max().unwrap_or(0);
        if n_max == 0 {
            return Err(Error::model("V-table has no entries"));
        }
        let mut ln_v: Vec<Vec<Option<f64>>> = (1..=n_max).map(|n| vec![None; n]).collect();
        for (n, k, lv) in entries {
            if k == 0 || k > n {
                return Err(Error::model(format!("V-table entry ({n},{k}) out of range")));
            }
            if lv.is_nan() || lv == f64::INFINITY {
                return Err(Error::model(format!("V-table entry ({n},{k}) is not a log-probability")));
            }
            if ln_v[n - 1][k - 1].replace(lv).is_some() {
                return Err(Error::model(format!("V-table entry ({n},{k}) repeated")));
            }
        }
        let ln_v = ln_v
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.ok_or_else(|| {
                            Error::model(format!("V-table entry ({},{}) missing", i + 1, j + 1))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sigma, ln_v })
    }

    /// Pitman-Yor weights `V_{n,k} = Π_{i<k} (θ + iσ) / (θ+1)_{n-1}`.
    pub fn from_pitman_yor(py: &PitmanYor, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::arg("n_max must be positive"));
        }
        let ln_v = (1..=n_max)
            .map(|n| (1..=n).map(|k| py.ln_v(n, k)).collect())
            .collect();
        Ok(Self {
            sigma: py.sigma(),
            ln_v,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_max(&self) -> usize {
        self.ln_v.len()
    }

    /// `ln V_{n,k}`, with `V_{0,0} = 1` and `V_{n,k} = 0` for `k > n`.
    pub fn ln_v(&self, n: usize, k: usize) -> Result<f64> {
        if n == 0 {
            return Ok(if k == 0 { 0.0 } else { LN_ZERO });
        }
        if n > self.n_max() {
            return Err(Error::limit(format!(
                "V_{{{n},{k}}} requested beyond the table (n_max = {})",
                self.n_max()
            )));
        }
        if k == 0 || k > n {
            return Ok(LN_ZERO);
        }
        Ok(self.ln_v[n - 1][k - 1])
    }

    /// The largest relative residual of the backward recursion over all
    /// `(n, k)` with `n + 1 <= n_max`, or `None` for a one-row table.
    pub fn recursion_residual(&self) -> Option<RecursionResidual> {
        let mut worst: Option<RecursionResidual> = None;
        for n in 1..self.n_max() {
            for k in 1..=n {
                let here = self.ln_v[n - 1][k - 1];
                let stay = self.ln_v[n][k - 1];
                let open = self.ln_v[n][k];
                let relative = if here == LN_ZERO {
                    if stay == LN_ZERO && open == LN_ZERO {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let lhs = (n as f64 - self.sigma * k as f64) * (stay - here).exp()
                        + (open - here).exp();
                    (lhs - 1.0).abs()
                };
                if worst.is_none_or(|w| relative > w.relative) {
                    worst = Some(RecursionResidual { n, k, relative });
                }
            }
        }
        worst
    }

    /// Checks `V_{1,1} = 1` and the recursion.
    pub fn validate(&self) -> Result<()> {
        if self.ln_v[0][0].abs() > 1e-12 {
            return Err(Error::model(format!(
                "V_{{1,1}} must be 1, got {}",
                self.ln_v[0][0].exp()
            )));
        }
        if let Some(r) = self.recursion_residual() {
            if !(r.relative <= RECURSION_TOLERANCE) {
                return Err(Error::model(format!(
                    "V-table violates the recursion at (n={}, k={}): relative residual {:e}",
                    r.n, r.k, r.relative
                )));
            }
        }
        Ok(())
    }

    /// Reads a CSV with header `n,k,log_v` without validating the recursion.
    pub fn read_csv_unchecked(path: &Path, sigma: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut entries = Vec::new();
        for row in rdr.deserialize::<CsvRow>() {
            let row = row.map_err(|e| csv_error(path, e))?;
            entries.push((row.n, row.k, row.log_v));
        }
        Self::from_entries_unchecked(sigma, entries)
    }

    pub fn read_csv(path: &Path, sigma: f64) -> Result<Self> {
        let table = Self::read_csv_unchecked(path, sigma)?;
        table.validate()?;
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for (i, row) in self.ln_v.iter().enumerate() {
            for (j, &log_v) in row.iter().enumerate() {
                w.serialize(CsvRow {
                    n: i + 1,
                    k: j + 1,
                    log_v,
                })
                .map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitman_yor_entries() {
        let py = PitmanYor::new(0.5, 1.0).unwrap();
        let v = VTable::from_pitman_yor(&py, 6).unwrap();
        assert_eq!(v.ln_v(1, 1).unwrap(), 0.0);
        assert!((v.ln_v(2, 2).unwrap().exp() - 0.75).abs() < 1e-15);
        assert!((v.ln_v(2, 1).unwrap().exp() - 0.5).abs() < 1e-15);
        v.validate().unwrap();
    }

    #[test]
    fn pitman_yor_tables_satisfy_recursion() {
        for &(s, t) in &[(0.0, 1.0), (0.25, 0.5), (0.5, 1.0), (-0.5, 1.5), (0.9, -0.5)] {
            let v = VTable::from_pitman_yor(&PitmanYor::new(s, t).unwrap(), 40).unwrap();
            let r = v.recursion_residual().unwrap();
            assert!(r.relative <= RECURSION_TOLERANCE, "{s} {t}: {r:?}");
        }
    }

    #[test]
    fn corrupted_table_is_rejected() {
        let py = PitmanYor::new(0.5, 1.0).unwrap();
        let good = VTable::from_pitman_yor(&py, 5).unwrap();
        let mut entries = Vec::new();
        for n in 1..=5 {
            for k in 1..=n {
                let mut lv = good.ln_v(n, k).unwrap();
                if (n, k) == (4, 2) {
                    lv += 0.01;
                }
                entries.push((n, k, lv));
            }
        }
        let err = VTable::from_entries(0.5, entries.clone()).unwrap_err();
        assert!(err.to_string().contains("recursion"), "{err}");
        let unchecked = VTable::from_entries_unchecked(0.5, entries).unwrap();
        assert!(unchecked.recursion_residual().unwrap().relative > 1e-3);
    }

    #[test]
    fn missing_entries_are_rejected() {
        let err = VTable::from_entries(0.0, vec![(1, 1, 0.0), (2, 2, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("missing"));
    }

    #[test]
    fn csv_round_trip() {
        let py = PitmanYor::new(0.25, 0.5).unwrap();
        let v = VTable::from_pitman_yor(&py, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        v.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,k,log_v\n"));
        let back = VTable::read_csv(&path, 0.25).unwrap();
        for n in 1..=8 {
            for k in 1..=n {
                assert_eq!(back.ln_v(n, k).unwrap(), v.ln_v(n, k).unwrap());
            }
        }
    }
}
