//! Exact law of the partition `Π̃` of observations by dish value.
//!
//! Four independent routes compute `P{Π̃_n = π}`:
//!
//! * [`induced_eppf_general`]: the sum over occupancies `m ∈ M(n)` and block
//!   profiles `λ ∈ Λ(m)` of `H#(m) c(λ) q̃(λ)`, for any EPPF;
//! * [`induced_eppf_gibbs`]: the same sum with the inner `λ`-sums collapsed
//!   to generalized Stirling numbers, for Gibbs-type EPPFs;
//! * [`induced_eppf_spike_slab`]: the closed form for a single atom;
//! * [`oracle_induced_eppf`]: brute force over latent partitions and dish
//!   assignments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basemeasure::{BaseMeasure, FreshCounter, Label, OccupancyVector};
use crate::caps;
use crate::eppf::{EppfModel, StirlingTable};
use crate::numeric::{clamp_roundoff, ln_factorial, ln_rising, log_sum_exp, LN_ZERO};
use crate::partitions::{enumerate_partitions, induced_partition, BlockSizes, Partition, PartitionIter};
use crate::{Error, Result};

/// Largest `Π n_i` accepted by [`enumerate_occupancies`].
pub const OCCUPANCY_CAP: usize = 10_000_000;
/// Largest number of dish assignments the oracle enumerates per latent partition.
pub const ORACLE_ASSIGNMENT_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedProbability {
    pub value: f64,
    /// Bound on the error caused by truncating an infinite atom set.
    pub error_bound: f64,
}

impl InducedProbability {
    fn exact(value: f64) -> Result<Self> {
        let value = clamp_roundoff(value);
        if !(0.0..=1.0 + 1e-9).contains(&value) || value.is_nan() {
            return Err(Error::state(format!("computed probability {value} out of range")));
        }
        Ok(Self {
            value,
            error_bound: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    General,
    Gibbs,
    SpikeSlab,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::General, Method::Gibbs, Method::SpikeSlab, Method::Oracle];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::General => "general",
            Method::Gibbs => "gibbs",
            Method::SpikeSlab => "spike_slab",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown method '{s}'")))
    }
}

/// Every `m` with `1 <= m_i <= n_i`, in odometer order (first entry fastest).
pub fn enumerate_occupancies(sizes: &BlockSizes) -> Result<Occupancies> {
    let count = sizes
        .sizes()
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&c| c <= OCCUPANCY_CAP);
    if count.is_none() {
        return Err(Error::limit(format!(
            "M(n) for sizes {:?} has more than {OCCUPANCY_CAP} elements",
            sizes.sizes()
        )));
    }
    Ok(Occupancies {
        n: sizes.sizes().to_vec(),
        current: Some(vec![1; sizes.k()]),
    })
}

#[derive(Debug, Clone)]
pub struct Occupancies {
    n: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Iterator for Occupancies {
    type Item = OccupancyVector;

    fn next(&mut self) -> Option<OccupancyVector> {
        let m = self.current.take()?;
        let mut succ = m.clone();
        let mut advanced = false;
        for i in 0..succ.len() {
            if succ[i] < self.n[i] {
                succ[i] += 1;
                advanced = true;
                break;
            }
            succ[i] = 1;
        }
        if advanced {
            self.current = Some(succ);
        }
        Some(OccupancyVector::new_unchecked(self.n.clone(), m))
    }
}

/// `λ ∈ Λ(m)`: row `i` holds the multiplicities `λ_{i1}, ..., λ_{i n_i}` of
/// part sizes in a split of block `i` (size `n_i`) into `m_i` latent blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockProfile {
    rows: Vec<Vec<usize>>,
}

impl BlockProfile {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.iter().any(|r| r.is_empty() || r.iter().all(|&l| l == 0)) {
            return Err(Error::arg("every profile row must describe a non-empty split"));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// `n_i = Σ_j j λ_{ij}`.
    pub fn n(&self) -> Vec<usize> {
        self.rows.iter().map(|r| row_total(r)).collect()
    }

    /// `m_i = Σ_j λ_{ij}`.
    pub fn m(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    /// `ln c(λ)`, `c(λ) = Π_i n_i! / Π_j λ_{ij}! (j!)^{λ_{ij}}`.
    pub fn ln_c(&self) -> f64 {
        self.rows.iter().map(|r| ln_row_count(r)).sum()
    }

    /// Number of latent partitions with this profile refining a fixed
    /// partition with block sizes `n`.
    pub fn c_lambda(&self) -> f64 {
        let c = self.ln_c().exp();
        if c < 9.0e15 {
            c.round()
        } else {
            c
        }
    }

    /// Latent block sizes realizing the profile, parts of each row in
    /// decreasing order.
    pub fn realization(&self) -> Vec<usize> {
        self.rows.iter().flat_map(|r| row_parts(r).into_iter().rev()).collect()
    }

    /// A second realization: rows in reverse order, parts increasing.
    fn alternate_realization(&self) -> Vec<usize> {
        self.rows.iter().rev().flat_map(|r| row_parts(r)).collect()
    }
}

fn row_total(row: &[usize]) -> usize {
    row.iter().enumerate().map(|(j, &l)| (j + 1) * l).sum()
}

fn ln_row_count(row: &[usize]) -> f64 {
    let mut acc = ln_factorial(row_total(row));
    for (j, &l) in row.iter().enumerate() {
        acc -= ln_factorial(l) + l as f64 * ln_factorial(j + 1);
    }
    acc
}

/// Parts in increasing order.
fn row_parts(row: &[usize]) -> Vec<usize> {
    row.iter()
        .enumerate()
        .flat_map(|(j, &l)| std::iter::repeat_n(j + 1, l))
        .collect()
}

/// Multiplicity vectors (length `n`) of the partitions of the integer `n`
/// into exactly `m` parts.
pub fn integer_partitions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, parts: usize, max_part: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if rem < parts || rem > parts * max_part {
            return;
        }
        for j in (1..=max_part.min(rem + 1 - parts)).rev() {
            cur[j - 1] += 1;
            rec(rem - j, parts - 1, j, cur, out);
            cur[j - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    if n == 0 || m == 0 || m > n {
        return out;
    }
    rec(n, m, n, &mut vec![0; n], &mut out);
    out
}

/// Every `λ ∈ Λ(m)`: the cartesian product over blocks of the integer
/// partitions of `n_i` into `m_i` parts.
pub fn enumerate_profiles(m: &OccupancyVector) -> Vec<BlockProfile> {
    let per_block: Vec<Vec<Vec<usize>>> = m
        .n()
        .iter()
        .zip(m.m())
        .map(|(&ni, &mi)| integer_partitions(ni, mi))
        .collect();
    let mut out = vec![Vec::new()];
    for choices in &per_block {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for row in choices {
                let mut p: Vec<Vec<usize>> = prefix.clone();
                p.push(row.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(|rows| BlockProfile { rows }).collect()
}

/// `ln q̃(λ)`: the EPPF at any size list realizing `λ`. Two different
/// realizations are evaluated and must agree.
pub fn ln_q_tilde(model: &EppfModel, profile: &BlockProfile) -> Result<f64> {
    let a = model.ln_eppf(&profile.realization())?;
    let b = model.ln_eppf(&profile.alternate_realization())?;
    let agree = if a == LN_ZERO || b == LN_ZERO {
        a == b || (a.exp() - b.exp()).abs() <= 1e-12
    } else {
        (a - b).abs() <= 1e-12
    };
    if !agree {
        return Err(Error::state(format!(
            "EPPF is not symmetric: q({:?}) = {} but q({:?}) = {}",
            profile.realization(),
            a.exp(),
            profile.alternate_realization(),
            b.exp()
        )));
    }
    Ok(a)
}

pub fn q_tilde(model: &EppfModel, profile: &BlockProfile) -> Result<f64> {
    ln_q_tilde(model, profile).map(f64::exp)
}

fn check_exact_cap(n: usize) -> Result<()> {
    let cap = caps::exact_cap();
    if n > cap {
        return Err(Error::limit(format!(
            "exact induced EPPF for n = {n} exceeds the cap {cap}"
        )));
    }
    Ok(())
}

fn check_model_range(model: &EppfModel, n: usize) -> Result<()> {
    match model.n_limit() {
        Some(limit) if n > limit => Err(Error::limit(format!(
            "model is tabulated up to n = {limit}, need {n}"
        ))),
        _ => Ok(()),
    }
}

fn canonical(sizes: &BlockSizes) -> Result<BlockSizes> {
    if sizes.k() == 0 {
        return Err(Error::arg("block sizes must be non-empty"));
    }
    Ok(sizes.canonical())
}

/// `Σ_{m ∈ M(n)} H#(m) Σ_{λ ∈ Λ(m)} c(λ) q̃(λ)`.
pub fn induced_eppf_general(
    model: &EppfModel,
    h: &BaseMeasure,
    sizes: &BlockSizes,
) -> Result<InducedProbability> {
    let sizes = canonical(sizes)?;
    check_exact_cap(sizes.n())?;
    check_model_range(model, sizes.n())?;
    let mut ln_terms = Vec::new();
    let mut bound = 0.0;
    for m in enumerate_occupancies(&sizes)? {
        let hs = h.h_sharp(m.m())?;
        let err = h.truncation_bound(m.total());
        if hs == 0.0 && err == 0.0 {
            continue;
        }
        let inner: Vec<f64> = enumerate_profiles(&m)
            .iter()
            .map(|lam| Ok(lam.ln_c() + ln_q_tilde(model, lam)?))
            .collect::<Result<_>>()?;
        let ln_inner = log_sum_exp(&inner);
        bound += err * ln_inner.exp();
        if hs > 0.0 {
            ln_terms.push(hs.ln() + ln_inner);
        }
    }
    let mut p = InducedProbability::exact(log_sum_exp(&ln_terms).exp())?;
    p.error_bound = bound;
    Ok(p)
}

/// `Σ_{m ∈ M(n)} H#(m) V_{n,|m|} Π_i S_σ(n_i, m_i)` for Gibbs-type models.
pub fn induced_eppf_gibbs(
    model: &EppfModel,
    h: &BaseMeasure,
    sizes: &BlockSizes,
) -> Result<InducedProbability> {
    let sigma = model
        .gibbs_sigma()
        .ok_or_else(|| Error::arg("the Gibbs route needs a Gibbs-type EPPF"))?;
    let sizes = canonical(sizes)?;
    check_exact_cap(sizes.n())?;
    check_model_range(model, sizes.n())?;
    let n = sizes.n();
    let largest = sizes.sizes()[0];
    let stirling = StirlingTable::new(sigma, largest)?;
    let mut ln_terms = Vec::new();
    let mut bound = 0.0;
    for m in enumerate_occupancies(&sizes)? {
        let hs = h.h_sharp(m.m())?;
        let err = h.truncation_bound(m.total());
        if hs == 0.0 && err == 0.0 {
            continue;
        }
        let mut ln_inner = model.ln_v(n, m.total())?;
        for (&ni, &mi) in m.n().iter().zip(m.m()) {
            ln_inner += stirling.ln_get(ni, mi)?;
        }
        bound += err * ln_inner.exp();
        if hs > 0.0 {
            ln_terms.push(hs.ln() + ln_inner);
        }
    }
    let mut p = InducedProbability::exact(log_sum_exp(&ln_terms).exp())?;
    p.error_bound = bound;
    Ok(p)
}

/// Closed form for `H = a δ_{x_0} + (1 - a) H^c`:
///
/// `(1-a)^k q(n) + (1-a)^{k-1} Σ_i Σ_{r=1}^{n_i} a^r q(n_{-i}) q_n(r | n_{-i})`,
///
/// where `q(n_{-i}) q_n(r | n_{-i})` is the probability that the latent
/// partition splits block `i` into `r` blocks and keeps the others intact.
/// Gibbs-type models use `V_{n,k-1+r} S_σ(n_i, r) Π_{j≠i} (1-σ)_{n_j-1}`;
/// other models sum `c(λ) q(n_{-i} ⊕ λ)` over splits `λ` of `n_i`.
pub fn induced_eppf_spike_slab(
    model: &EppfModel,
    a: f64,
    sizes: &BlockSizes,
) -> Result<InducedProbability> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::arg(format!("spike mass must lie in [0, 1], got {a}")));
    }
    let sizes = canonical(sizes)?;
    check_exact_cap(sizes.n())?;
    check_model_range(model, sizes.n())?;
    let s = sizes.sizes();
    let n = sizes.n();
    let k = sizes.k();
    let slab = 1.0 - a;
    let mut total = slab.powi(k as i32) * model.ln_eppf(s)?.exp();
    let stirling = match model.gibbs_sigma() {
        Some(sigma) => Some((sigma, StirlingTable::new(sigma, s[0])?)),
        None => None,
    };
    for i in 0..k {
        let rest: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        let mut inner = 0.0;
        for r in 1..=s[i] {
            let split = match &stirling {
                Some((sigma, table)) => {
                    let ln_rest: f64 = rest.iter().map(|&x| ln_rising(1.0 - sigma, x - 1)).sum();
                    (model.ln_v(n, k - 1 + r)? + table.ln_get(s[i], r)? + ln_rest).exp()
                }
                None => {
                    let mut acc = 0.0;
                    for row in integer_partitions(s[i], r) {
                        let mut latent = rest.clone();
                        latent.extend(row_parts(&row).into_iter().rev());
                        acc += (ln_row_count(&row) + model.ln_eppf(&latent)?).exp();
                    }
                    acc
                }
            };
            inner += a.powi(r as i32) * split;
        }
        total += slab.powi(k as i32 - 1) * inner;
    }
    InducedProbability::exact(total)
}

/// `P{ξ_1 = x̄_{i_1}, ..., ξ_n = x̄_{i_n}} = Σ_{π ∈ P_n} q(π) Π_blocks H(∩ {x̄_{i_j}})`.
pub fn joint_atom_probability(model: &EppfModel, h: &BaseMeasure, atoms: &[usize]) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::arg("no atom labels given"));
    }
    if let Some(&bad) = atoms.iter().find(|&&i| i == 0 || i > h.num_atoms()) {
        return Err(Error::arg(format!(
            "atom index {bad} outside 1..={}",
            h.num_atoms()
        )));
    }
    let w = h.atom_weights();
    let mut total = 0.0;
    for p in enumerate_partitions(atoms.len())? {
        let mut ln_weight = 0.0;
        for b in p.blocks() {
            let label = atoms[b[0] - 1];
            if b.iter().any(|&j| atoms[j - 1] != label) {
                ln_weight = LN_ZERO;
                break;
            }
            ln_weight += w[label - 1].ln();
        }
        if ln_weight == LN_ZERO {
            continue;
        }
        total += (model.ln_eppf(p.block_sizes().sizes())? + ln_weight).exp();
    }
    Ok(total)
}

/// Brute force: for every latent partition `π*` of `{1, ..., n}` and every
/// assignment of an atom or a fresh diffuse value to each latent block,
/// add `q(π*) × P(assignment)` when the dish labels induce `target`.
pub fn oracle_induced_eppf(model: &EppfModel, h: &BaseMeasure, target: &Partition) -> Result<f64> {
    let n = target.n();
    let cap = caps::oracle_cap();
    if n > cap {
        return Err(Error::limit(format!("oracle for n = {n} exceeds the cap {cap}")));
    }
    check_model_range(model, n)?;
    let choices = h.num_atoms() + 1;
    let diffuse = h.diffuse_mass();
    let weights = h.atom_weights();
    let mut total = 0.0;
    for latent in PartitionIter::uncapped(n) {
        // Merging only coarsens, so only refinements of the target contribute.
        if !latent.refines(target) {
            continue;
        }
        let q = model.ln_eppf(latent.block_sizes().sizes())?.exp();
        if q == 0.0 {
            continue;
        }
        let k = latent.num_blocks();
        let assignments = (choices as f64).powi(k as i32);
        if assignments > ORACLE_ASSIGNMENT_CAP as f64 {
            return Err(Error::limit(format!(
                "oracle would enumerate {assignments} dish assignments"
            )));
        }
        let owner = latent.assignment();
        let mut dish = vec![0usize; k];
        let mut labels = vec![Label::Atom(0); n];
        loop {
            let mut prob = 1.0;
            let mut fresh = FreshCounter::default();
            let block_labels: Vec<Label> = dish
                .iter()
                .map(|&d| {
                    if d == 0 {
                        prob *= diffuse;
                        fresh.next_label()
                    } else {
                        prob *= weights[d - 1];
                        Label::Atom(d)
                    }
                })
                .collect();
            if prob > 0.0 {
                for (i, l) in labels.iter_mut().enumerate() {
                    *l = block_labels[owner[i]];
                }
                if induced_partition(&labels)? == *target {
                    total += q * prob;
                }
            }
            // odometer over dish choices
            let mut i = 0;
            while i < k {
                dish[i] += 1;
                if dish[i] < choices {
                    break;
                }
                dish[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }
    Ok(total)
}

/// Dispatches to one route. The spike-and-slab route needs a measure with at
/// most one atom.
pub fn induced_probability(
    method: Method,
    model: &EppfModel,
    h: &BaseMeasure,
    target: &Partition,
) -> Result<InducedProbability> {
    let sizes = target.block_sizes();
    match method {
        Method::General => induced_eppf_general(model, h, &sizes),
        Method::Gibbs => induced_eppf_gibbs(model, h, &sizes),
        Method::SpikeSlab => {
            if h.num_atoms() > 1 || h.family().is_some() {
                return Err(Error::arg(
                    "the spike-and-slab route needs a base measure with at most one atom",
                ));
            }
            induced_eppf_spike_slab(model, h.atom_mass(), &sizes)
        }
        Method::Oracle => InducedProbability::exact(oracle_induced_eppf(model, h, target)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn py(s: f64, t: f64) -> EppfModel {
        EppfModel::pitman_yor(s, t).unwrap()
    }

    fn sizes(v: &[usize]) -> BlockSizes {
        BlockSizes::new(v.to_vec()).unwrap()
    }

    #[test]
    fn occupancy_examples() {
        let all: Vec<Vec<usize>> = enumerate_occupancies(&sizes(&[1, 1]))
            .unwrap()
            .map(|m| m.m().to_vec())
            .collect();
        assert_eq!(all, vec![vec![1, 1]]);
        let all: Vec<Vec<usize>> = enumerate_occupancies(&sizes(&[2, 1]))
            .unwrap()
            .map(|m| m.m().to_vec())
            .collect();
        assert_eq!(all, vec![vec![1, 1], vec![2, 1]]);
        assert_eq!(enumerate_occupancies(&sizes(&[3, 2])).unwrap().count(), 6);
        assert!(matches!(
            enumerate_occupancies(&sizes(&[100_000, 100_000])),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn profile_examples() {
        let m = OccupancyVector::new(vec![3], vec![2]).unwrap();
        let p = enumerate_profiles(&m);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].rows(), &[vec![1, 1, 0]]);
        assert_eq!(p[0].c_lambda(), 3.0);

        let m = OccupancyVector::new(vec![4], vec![2]).unwrap();
        let mut rows: Vec<Vec<usize>> = enumerate_profiles(&m).into_iter().map(|p| p.rows()[0].clone()).collect();
        rows.sort();
        assert_eq!(rows, vec![vec![0, 2, 0, 0], vec![1, 0, 1, 0]]);
        let pairs = BlockProfile::new(vec![vec![0, 2, 0, 0]]).unwrap();
        assert_eq!(pairs.c_lambda(), 3.0);

        let m = OccupancyVector::new(vec![2, 3, 1], vec![1, 1, 1]).unwrap();
        let p = enumerate_profiles(&m);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].rows(), &[vec![0, 1], vec![0, 0, 1], vec![1]]);
        assert_eq!(p[0].c_lambda(), 1.0);
    }

    #[test]
    fn q_tilde_examples() {
        let model = py(0.5, 1.0);
        let singletons = BlockProfile::new(vec![vec![1], vec![1]]).unwrap();
        assert!((q_tilde(&model, &singletons).unwrap() - 0.75).abs() < 1e-15);
        let two_one = BlockProfile::new(vec![vec![1, 1, 0]]).unwrap();
        assert!((q_tilde(&model, &two_one).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn worked_spike_slab_value() {
        let model = py(0.5, 1.0);
        let h = BaseMeasure::spike_slab(0.3).unwrap();
        for f in [
            induced_eppf_general(&model, &h, &sizes(&[2])).unwrap().value,
            induced_eppf_gibbs(&model, &h, &sizes(&[2])).unwrap().value,
            induced_eppf_spike_slab(&model, 0.3, &sizes(&[2])).unwrap().value,
            oracle_induced_eppf(&model, &h, &Partition::from_sizes(&[2]).unwrap()).unwrap(),
        ] {
            assert!((f - 0.3175).abs() < 1e-12, "{f}");
        }
        let p = induced_eppf_general(&model, &h, &sizes(&[1, 1])).unwrap().value;
        assert!((p - 0.6825).abs() < 1e-12);
    }

    #[test]
    fn diffuse_reduces_to_eppf() {
        let model = py(0.25, 0.5);
        let h = BaseMeasure::diffuse();
        for s in [vec![3, 1], vec![1, 1, 2], vec![4]] {
            let q = model.eval_eppf(&sizes(&s)).unwrap();
            let g = induced_eppf_general(&model, &h, &sizes(&s)).unwrap().value;
            let ss = induced_eppf_spike_slab(&model, 0.0, &sizes(&s)).unwrap().value;
            assert!((g - q).abs() < 1e-14 && (ss - q).abs() < 1e-14);
        }
    }

    #[test]
    fn full_single_atom_is_one_block() {
        let model = py(0.5, 1.0);
        let h = BaseMeasure::spike_slab(1.0).unwrap();
        for n in 1..=6 {
            let v = induced_eppf_gibbs(&model, &h, &sizes(&[n])).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12);
            let v = induced_eppf_spike_slab(&model, 1.0, &sizes(&[n])).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(induced_eppf_general(&model, &h, &sizes(&[1, 1])).unwrap().value, 0.0);
        assert_eq!(
            oracle_induced_eppf(&model, &h, &Partition::from_sizes(&[3]).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn spike_slab_route_rejects_bad_inputs() {
        let model = py(0.5, 1.0);
        assert!(induced_eppf_spike_slab(&model, 1.5, &sizes(&[2])).is_err());
        let h = BaseMeasure::new(vec![0.2, 0.1]).unwrap();
        assert!(induced_probability(Method::SpikeSlab, &model, &h, &Partition::from_sizes(&[2]).unwrap()).is_err());
    }

    #[test]
    fn joint_atom_examples() {
        let model = py(0.5, 1.0);
        let h = BaseMeasure::new(vec![0.3, 0.2]).unwrap();
        assert!((joint_atom_probability(&model, &h, &[2]).unwrap() - 0.2).abs() < 1e-15);
        let p = joint_atom_probability(&model, &h, &[1, 1]).unwrap();
        assert!((p - (0.25 * 0.3 + 0.75 * 0.09)).abs() < 1e-15);
        assert!((p - 0.1425).abs() < 1e-15);
        let p = joint_atom_probability(&model, &h, &[1, 2]).unwrap();
        assert!((p - 0.75 * 0.3 * 0.2).abs() < 1e-15);
        assert!(joint_atom_probability(&model, &h, &[3]).is_err());
    }

    #[test]
    fn caps_are_enforced() {
        let model = py(0.5, 1.0);
        let h = BaseMeasure::spike_slab(0.3).unwrap();
        assert!(matches!(
            induced_eppf_general(&model, &h, &sizes(&[11])),
            Err(Error::ResourceLimit(_))
        ));
        assert!(matches!(
            oracle_induced_eppf(&model, &h, &Partition::from_sizes(&[8]).unwrap()),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("fast".parse::<Method>().is_err());
    }
}
