//! Exchangeable partition probability functions of latent partitions.
//!
//! Supported laws are Pitman-Yor `PY(σ, θ)`, general Gibbs type given by a
//! [`VTable`], and user-supplied evaluators implementing [`EppfEvaluator`].
//! Gibbs-type EPPFs have the form `V_{n,k} Π_j (1-σ)_{n_j - 1}`; everything
//! is evaluated in log space.

mod stirling;
mod vtable;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

pub use stirling::{stirling_by_definition, stirling_sigma, StirlingTable};
pub use vtable::{RecursionResidual, VTable, RECURSION_TOLERANCE};

use crate::numeric::{ln_rising, LN_ZERO};
use crate::partitions::{distinct_permutations, enumerate_partitions, BlockSizes, Partition};
use crate::{Error, Result};

/// A user-supplied EPPF. Implementations must be symmetric in the block
/// sizes and satisfy the addition rule; neither is assumed, both can be
/// checked with [`addition_rule_residual`] and [`symmetry_residual`].
pub trait EppfEvaluator: Send + Sync {
    /// `q(n_1, ..., n_k)`; the empty argument must give 1.
    fn eppf(&self, sizes: &[usize]) -> f64;

    fn name(&self) -> &str {
        "custom"
    }
}

/// Two-parameter Pitman-Yor law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitmanYor {
    sigma: f64,
    theta: f64,
    /// `θ / |σ|` when `σ < 0`: the number of blocks the partition fills.
    max_blocks: Option<usize>,
}

impl PitmanYor {
    /// Accepts `0 <= σ < 1, θ > -σ`, or `σ < 0, θ = m|σ|` for a positive integer `m`.
    pub fn new(sigma: f64, theta: f64) -> Result<Self> {
        if !sigma.is_finite() || !theta.is_finite() {
            return Err(Error::model("Pitman-Yor parameters must be finite"));
        }
        if (0.0..1.0).contains(&sigma) {
            if theta > -sigma {
                return Ok(Self {
                    sigma,
                    theta,
                    max_blocks: None,
                });
            }
            return Err(Error::model(format!(
                "Pitman-Yor with σ = {sigma} needs θ > -σ, got θ = {theta}"
            )));
        }
        if sigma < 0.0 {
            let m = theta / -sigma;
            let rounded = m.round();
            if rounded >= 1.0 && (m - rounded).abs() <= 1e-9 * rounded.max(1.0) {
                return Ok(Self {
                    sigma,
                    theta,
                    max_blocks: Some(rounded as usize),
                });
            }
            return Err(Error::model(format!(
                "Pitman-Yor with σ = {sigma} < 0 needs θ = m|σ| for a positive integer m, got θ = {theta}"
            )));
        }
        Err(Error::model(format!("Pitman-Yor needs σ < 1, got σ = {sigma}")))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn max_blocks(&self) -> Option<usize> {
        self.max_blocks
    }

    /// `θ + iσ`, exact zero at `i = m` when `σ < 0`.
    fn new_block_factor(&self, i: usize) -> f64 {
        match self.max_blocks {
            Some(m) if i >= m => 0.0,
            Some(m) => -self.sigma * (m - i) as f64,
            None => self.theta + i as f64 * self.sigma,
        }
    }

    /// `ln V_{n,k} = Σ_{i<k} ln(θ + iσ) - ln (θ+1)_{n-1}`.
    pub fn ln_v(&self, n: usize, k: usize) -> f64 {
        if n == 0 {
            return if k == 0 { 0.0 } else { LN_ZERO };
        }
        if k == 0 || k > n {
            return LN_ZERO;
        }
        let mut acc = -ln_rising(self.theta + 1.0, n - 1);
        for i in 1..k {
            let f = self.new_block_factor(i);
            if f <= 0.0 {
                return LN_ZERO;
            }
            acc += f.ln();
        }
        acc
    }
}

/// Law of the latent partition.
#[derive(Clone)]
pub enum EppfModel {
    PitmanYor(PitmanYor),
    Gibbs(Arc<VTable>),
    Custom(Arc<dyn EppfEvaluator>),
}

impl fmt::Debug for EppfModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EppfModel::PitmanYor(py) => f
                .debug_struct("PitmanYor")
                .field("sigma", &py.sigma)
                .field("theta", &py.theta)
                .finish(),
            EppfModel::Gibbs(v) => f
                .debug_struct("Gibbs")
                .field("sigma", &v.sigma())
                .field("n_max", &v.n_max())
                .finish(),
            EppfModel::Custom(c) => f.debug_tuple("Custom").field(&c.name()).finish(),
        }
    }
}

impl EppfModel {
    pub fn pitman_yor(sigma: f64, theta: f64) -> Result<Self> {
        PitmanYor::new(sigma, theta).map(EppfModel::PitmanYor)
    }

    pub fn gibbs(table: VTable) -> Self {
        EppfModel::Gibbs(Arc::new(table))
    }

    pub fn custom(evaluator: impl EppfEvaluator + 'static) -> Self {
        EppfModel::Custom(Arc::new(evaluator))
    }

    /// Short name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            EppfModel::PitmanYor(_) => "pitman_yor",
            EppfModel::Gibbs(_) => "gibbs",
            EppfModel::Custom(_) => "custom",
        }
    }

    /// `σ` for Gibbs-type models (Pitman-Yor included).
    pub fn gibbs_sigma(&self) -> Option<f64> {
        match self {
            EppfModel::PitmanYor(py) => Some(py.sigma),
            EppfModel::Gibbs(v) => Some(v.sigma()),
            EppfModel::Custom(_) => None,
        }
    }

    /// `ln V_{n,k}` for Gibbs-type models.
    pub fn ln_v(&self, n: usize, k: usize) -> Result<f64> {
        match self {
            EppfModel::PitmanYor(py) => Ok(py.ln_v(n, k)),
            EppfModel::Gibbs(v) => v.ln_v(n, k),
            EppfModel::Custom(_) => Err(Error::arg("a custom EPPF has no V-weights")),
        }
    }

    /// Largest `n` this model can evaluate, if bounded.
    pub fn n_limit(&self) -> Option<usize> {
        match self {
            EppfModel::Gibbs(v) => Some(v.n_max()),
            _ => None,
        }
    }

    /// `ln q(n_1, ..., n_k)`.
    pub fn ln_eppf(&self, sizes: &[usize]) -> Result<f64> {
        if sizes.contains(&0) {
            return Err(Error::arg("block sizes must be positive"));
        }
        if sizes.is_empty() {
            return Ok(0.0);
        }
        match self {
            EppfModel::Custom(c) => {
                let q = c.eppf(sizes);
                if !(0.0..=1.0 + 1e-12).contains(&q) {
                    return Err(Error::model(format!(
                        "custom EPPF returned {q} for {sizes:?}"
                    )));
                }
                Ok(q.ln())
            }
            _ => {
                let sigma = self.gibbs_sigma().unwrap_or_default();
                let n: usize = sizes.iter().sum();
                let ln_v = self.ln_v(n, sizes.len())?;
                if ln_v == LN_ZERO {
                    return Ok(LN_ZERO);
                }
                // Sum in a fixed order so that permuted sizes give identical bits.
                let mut sorted = sizes.to_vec();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                Ok(sorted
                    .iter()
                    .fold(ln_v, |acc, &s| acc + ln_rising(1.0 - sigma, s - 1)))
            }
        }
    }

    pub fn eval_eppf(&self, sizes: &BlockSizes) -> Result<f64> {
        self.ln_eppf(sizes.sizes()).map(f64::exp)
    }

    /// Conditional probabilities that the next observation joins block
    /// `1..=k` or opens a new block (last entry).
    pub fn predictive_weights(&self, sizes: &BlockSizes) -> Result<Vec<f64>> {
        let n = sizes.n();
        let k = sizes.k();
        if k == 0 {
            return Ok(vec![1.0]);
        }
        let zero_state = || {
            Error::state(format!(
                "configuration {:?} has probability zero",
                sizes.sizes()
            ))
        };
        match self {
            EppfModel::PitmanYor(py) => {
                if let Some(m) = py.max_blocks {
                    if k > m {
                        return Err(zero_state());
                    }
                }
                let denom = py.theta + n as f64;
                let mut w: Vec<f64> = sizes
                    .sizes()
                    .iter()
                    .map(|&s| (s as f64 - py.sigma) / denom)
                    .collect();
                w.push(py.new_block_factor(k) / denom);
                Ok(w)
            }
            EppfModel::Gibbs(v) => {
                let here = v.ln_v(n, k)?;
                if here == LN_ZERO {
                    return Err(zero_state());
                }
                let stay = (v.ln_v(n + 1, k)? - here).exp();
                let open = (v.ln_v(n + 1, k + 1)? - here).exp();
                let mut w: Vec<f64> = sizes
                    .sizes()
                    .iter()
                    .map(|&s| stay * (s as f64 - v.sigma()))
                    .collect();
                w.push(open);
                Ok(w)
            }
            EppfModel::Custom(_) => {
                let here = self.ln_eppf(sizes.sizes())?;
                if here == LN_ZERO {
                    return Err(zero_state());
                }
                let mut next = sizes.sizes().to_vec();
                let mut w = Vec::with_capacity(k + 1);
                for i in 0..k {
                    next[i] += 1;
                    w.push((self.ln_eppf(&next)? - here).exp());
                    next[i] -= 1;
                }
                next.push(1);
                w.push((self.ln_eppf(&next)? - here).exp());
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-8 {
                    return Err(Error::state(format!(
                        "custom EPPF violates the addition rule at {:?} (weights sum to {total})",
                        sizes.sizes()
                    )));
                }
                Ok(w)
            }
        }
    }

    /// Sequential draw of the latent partition of `{1, ..., n}`.
    pub fn sample_latent_partition<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<Partition> {
        if n == 0 {
            return Err(Error::arg("n must be positive"));
        }
        if let Some(limit) = self.n_limit() {
            if n > limit {
                return Err(Error::limit(format!(
                    "sampling {n} observations needs V-weights up to n = {n}, table has {limit}"
                )));
            }
        }
        let mut sizes: Vec<usize> = Vec::new();
        let mut rgs = Vec::with_capacity(n);
        for _ in 0..n {
            let w = self.predictive_weights(&BlockSizes::new(sizes.clone())?)?;
            let c = inverse_cdf(&w, rng.random::<f64>());
            if c == sizes.len() {
                sizes.push(1);
            } else {
                sizes[c] += 1;
            }
            rgs.push(c);
        }
        Ok(Partition::from_rgs(&rgs))
    }
}

/// Index selected by `u ∈ [0, 1)` under the (possibly unnormalized)
/// weights, scanning left to right.
pub(crate) fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Distinct block-size sequences (in order of appearance) over all
/// partitions of `{1, ..., n}` for `n` in `1..=n_max`.
fn size_sequences(n_max: usize) -> Result<Vec<Vec<usize>>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for n in 1..=n_max {
        for p in enumerate_partitions(n)? {
            let s = p.block_sizes().sizes().to_vec();
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// `max |q(n) - Σ_i q(.., n_i + 1, ..) - q(n, 1)|` over all size sequences
/// with `n <= n_max` (plus the empty one).
pub fn addition_rule_residual(model: &EppfModel, n_max: usize) -> Result<f64> {
    let mut seqs = size_sequences(n_max)?;
    seqs.push(Vec::new());
    let mut worst: f64 = 0.0;
    for s in seqs {
        let here = model.ln_eppf(&s)?.exp();
        let mut next = s.clone();
        let mut total = 0.0;
        for i in 0..s.len() {
            next[i] += 1;
            total += model.ln_eppf(&next)?.exp();
            next[i] -= 1;
        }
        next.push(1);
        total += model.ln_eppf(&next)?.exp();
        worst = worst.max((here - total).abs());
    }
    Ok(worst)
}

/// `max |q(ρ(n)) - q(n)|` over all reorderings `ρ` of every size sequence
/// with `n <= n_max`.
pub fn symmetry_residual(model: &EppfModel, n_max: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in size_sequences(n_max)? {
        let base = model.ln_eppf(&s)?.exp();
        for perm in distinct_permutations(&s) {
            worst = worst.max((model.ln_eppf(&perm)?.exp() - base).abs());
        }
    }
    Ok(worst)
}

/// `|Σ_{π ∈ P_n} q(π) - 1|`.
pub fn normalization_residual(model: &EppfModel, n: usize) -> Result<f64> {
    let mut total = 0.0;
    for p in enumerate_partitions(n)? {
        total += model.ln_eppf(p.block_sizes().sizes())?.exp();
    }
    Ok((total - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn py(s: f64, t: f64) -> EppfModel {
        EppfModel::pitman_yor(s, t).unwrap()
    }

    fn sizes(v: &[usize]) -> BlockSizes {
        BlockSizes::new(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_eppf_values() {
        let m = py(0.5, 1.0);
        assert!((m.eval_eppf(&sizes(&[2])).unwrap() - 0.25).abs() < 1e-15);
        assert!((m.eval_eppf(&sizes(&[1, 1])).unwrap() - 0.75).abs() < 1e-15);
        for model in [py(0.5, 1.0), py(0.0, 3.0), py(-0.5, 1.5)] {
            assert_eq!(model.eval_eppf(&sizes(&[1])).unwrap(), 1.0);
        }
    }

    #[test]
    fn parameter_domain() {
        assert!(PitmanYor::new(0.5, -0.5).is_err());
        assert!(PitmanYor::new(0.5, -0.4).is_ok());
        assert!(PitmanYor::new(1.0, 1.0).is_err());
        assert!(PitmanYor::new(-0.5, 1.5).is_ok());
        assert!(PitmanYor::new(-0.5, 1.2).is_err());
        assert!(PitmanYor::new(-0.5, 0.0).is_err());
        assert_eq!(PitmanYor::new(-0.5, 1.5).unwrap().max_blocks(), Some(3));
    }

    #[test]
    fn predictive_examples() {
        let w = py(0.5, 1.0).predictive_weights(&sizes(&[1])).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
        let w = py(0.0, 1.0).predictive_weights(&sizes(&[2, 1])).unwrap();
        let expected = [0.5, 0.25, 0.25];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(py(0.3, 2.0).predictive_weights(&BlockSizes::empty()).unwrap(), vec![1.0]);
    }

    #[test]
    fn negative_sigma_stops_opening_blocks() {
        let m = py(-0.5, 1.0); // two blocks at most
        let w = m.predictive_weights(&sizes(&[3, 1])).unwrap();
        assert_eq!(*w.last().unwrap(), 0.0);
        assert_eq!(m.eval_eppf(&sizes(&[1, 1, 1])).unwrap(), 0.0);
        assert!(matches!(
            m.predictive_weights(&sizes(&[1, 1, 1])),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn gibbs_predictive_matches_pitman_yor() {
        let p = PitmanYor::new(0.25, 0.5).unwrap();
        let g = EppfModel::gibbs(VTable::from_pitman_yor(&p, 12).unwrap());
        let m = EppfModel::PitmanYor(p);
        for s in [vec![1], vec![3, 1], vec![2, 2, 1, 4]] {
            let a = m.predictive_weights(&sizes(&s)).unwrap();
            let b = g.predictive_weights(&sizes(&s)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_out_of_table_is_resource_limit() {
        let p = PitmanYor::new(0.5, 1.0).unwrap();
        let g = EppfModel::gibbs(VTable::from_pitman_yor(&p, 4).unwrap());
        assert!(matches!(
            g.eval_eppf(&sizes(&[3, 2])),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn single_observation_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for model in [py(0.5, 1.0), py(-0.5, 1.5)] {
            let p = model.sample_latent_partition(1, &mut rng).unwrap();
            assert_eq!(p.blocks(), &[vec![1]]);
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let m = py(0.5, 1.0);
        let a = m
            .sample_latent_partition(30, &mut ChaCha8Rng::seed_from_u64(11))
            .unwrap();
        let b = m
            .sample_latent_partition(30, &mut ChaCha8Rng::seed_from_u64(11))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_cdf_tie_breaking() {
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.0), 0);
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.5), 1);
        assert_eq!(inverse_cdf(&[0.5, 0.0], 0.999_999_9), 0);
    }

    struct Uniform2;

    impl EppfEvaluator for Uniform2 {
        // Not an EPPF: sizes (2) and (1,1) both get 1/2 but (1,1,1) gets 1.
        fn eppf(&self, sizes: &[usize]) -> f64 {
            match sizes.len() {
                0 | 1 if sizes.iter().sum::<usize>() <= 1 => 1.0,
                _ if sizes.iter().sum::<usize>() == 2 => 0.5,
                _ => 1.0,
            }
        }
    }

    #[test]
    fn broken_custom_evaluator_is_caught() {
        let m = EppfModel::custom(Uniform2);
        assert!(addition_rule_residual(&m, 3).unwrap() > 0.1);
        assert!(matches!(
            m.predictive_weights(&sizes(&[2])),
            Err(Error::InvalidState(_))
        ));
    }
}
