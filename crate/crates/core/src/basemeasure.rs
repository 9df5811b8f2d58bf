//! Base measures `H = Σ ā_i δ_{x̄_i} + (1 - a) H^c` reduced to what the
//! partition law depends on: the atom weights and the diffuse mass.
//!
//! Atom locations never matter, only their weights, so atoms are identified
//! by a 1-based index. Draws from the diffuse part are distinct with
//! probability one and are represented as unique fresh tokens.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::{binomial, clamp_roundoff, zeta};
use crate::partitions::PartitionIter;
use crate::{Error, Result};

/// Tolerance on `Σ ā_i <= 1`.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Realized value of a dish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// The `i`-th atom (1-based).
    Atom(usize),
    /// A draw from the diffuse part, unique within a path.
    Fresh(u64),
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Atom(i) => write!(f, "A{i}"),
            Label::Fresh(id) => write!(f, "F{id}"),
        }
    }
}

/// Source of fresh diffuse tokens for one sample path.
#[derive(Debug, Default, Clone)]
pub struct FreshCounter(u64);

impl FreshCounter {
    pub fn next_label(&mut self) -> Label {
        let id = self.0;
        self.0 += 1;
        Label::Fresh(id)
    }

    pub fn issued(&self) -> u64 {
        self.0
    }
}

/// Countable atom families, with weights normalized within the atom set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AtomFamily {
    /// `a_j = j^{-s} / ζ(s)`, `s > 1`.
    PowerLaw { exponent: f64 },
    /// `a_j = (1 - ρ) ρ^{j-1}`, `0 < ρ < 1`.
    Geometric { ratio: f64 },
}

impl AtomFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            AtomFamily::PowerLaw { exponent } if exponent > 1.0 && exponent.is_finite() => Ok(()),
            AtomFamily::PowerLaw { exponent } => Err(Error::arg(format!(
                "power-law exponent must be > 1, got {exponent}"
            ))),
            AtomFamily::Geometric { ratio } if ratio > 0.0 && ratio < 1.0 => Ok(()),
            AtomFamily::Geometric { ratio } => Err(Error::arg(format!(
                "geometric ratio must lie in (0, 1), got {ratio}"
            ))),
        }
    }

    /// Normalized weight of atom `j >= 1`.
    pub fn weight(&self, j: usize) -> f64 {
        match *self {
            AtomFamily::PowerLaw { exponent } => (j as f64).powf(-exponent) / zeta(exponent),
            AtomFamily::Geometric { ratio } => (1.0 - ratio) * ratio.powi(j as i32 - 1),
        }
    }

    /// `#{j : a_j >= 1/x}` from the closed form of the weights.
    pub fn alpha(&self, x: f64) -> usize {
        let guess = match *self {
            AtomFamily::PowerLaw { exponent } => (x / zeta(exponent)).powf(1.0 / exponent),
            AtomFamily::Geometric { ratio } => 1.0 + (x * (1.0 - ratio)).ln() / (1.0 / ratio).ln(),
        };
        if !(guess >= 1.0) {
            return usize::from(self.weight(1) >= 1.0 / x);
        }
        // Weights are decreasing; correct the floating-point guess on both sides.
        let mut j = guess.floor() as usize;
        while j > 0 && self.weight(j) < 1.0 / x {
            j -= 1;
        }
        while self.weight(j + 1) >= 1.0 / x {
            j += 1;
        }
        j
    }
}

/// Parametric description of a truncated infinite atom set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyTag {
    pub family: AtomFamily,
    pub truncation: usize,
    /// `a` of the untruncated measure.
    pub total_atom_mass: f64,
    /// Atom mass beyond the truncation, carried by the diffuse part.
    pub tail_mass: f64,
}

#[derive(Debug)]
pub struct BaseMeasure {
    atom_weights: Vec<f64>,
    atom_mass: f64,
    // cumulative[i] = ā_1 + ... + ā_{i+1}
    cumulative: Vec<f64>,
    family: Option<FamilyTag>,
    power_sums: Mutex<HashMap<(Vec<usize>, usize), f64>>,
}

impl Clone for BaseMeasure {
    fn clone(&self) -> Self {
        Self {
            atom_weights: self.atom_weights.clone(),
            atom_mass: self.atom_mass,
            cumulative: self.cumulative.clone(),
            family: self.family,
            power_sums: Mutex::new(HashMap::new()),
        }
    }
}

impl BaseMeasure {
    /// Finitely many atoms with the given weights; the rest is diffuse.
    pub fn new(atom_weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = atom_weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::arg(format!("atom weights must be positive, got {w}")));
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = atom_weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if acc > 1.0 + MASS_TOLERANCE {
            return Err(Error::arg(format!("atom weights sum to {acc} > 1")));
        }
        Ok(Self {
            atom_mass: acc,
            atom_weights,
            cumulative,
            family: None,
            power_sums: Mutex::new(HashMap::new()),
        })
    }

    /// Atoms plus an explicit diffuse mass; the two must add to one.
    pub fn with_diffuse(atom_weights: Vec<f64>, diffuse: f64) -> Result<Self> {
        let h = Self::new(atom_weights)?;
        if !(diffuse >= 0.0) || (h.atom_mass + diffuse - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::arg(format!(
                "atom mass {} and diffuse mass {diffuse} do not add to 1",
                h.atom_mass
            )));
        }
        Ok(h)
    }

    pub fn diffuse() -> Self {
        Self::new(Vec::new()).expect("empty atom set is valid")
    }

    /// `a δ_{x_0} + (1 - a) H^c`, `0 <= a <= 1`.
    pub fn spike_slab(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::arg(format!("spike mass must lie in [0, 1], got {a}")));
        }
        if a == 0.0 {
            Ok(Self::diffuse())
        } else {
            Self::new(vec![a])
        }
    }

    /// The first `truncation` atoms of `family`, scaled to total mass
    /// `total_atom_mass`; the tail mass joins the diffuse part.
    pub fn from_family(family: AtomFamily, truncation: usize, total_atom_mass: f64) -> Result<Self> {
        family.validate()?;
        if truncation == 0 {
            return Err(Error::arg("truncation must be positive"));
        }
        if !(total_atom_mass > 0.0 && total_atom_mass <= 1.0) {
            return Err(Error::arg(format!(
                "total atom mass must lie in (0, 1], got {total_atom_mass}"
            )));
        }
        let weights: Vec<f64> = (1..=truncation)
            .map(|j| total_atom_mass * family.weight(j))
            .take_while(|&w| w > 0.0)
            .collect();
        let mut h = Self::new(weights)?;
        let tail_mass = (total_atom_mass - h.atom_mass).max(0.0);
        h.family = Some(FamilyTag {
            family,
            truncation,
            total_atom_mass,
            tail_mass,
        });
        Ok(h)
    }

    pub fn atom_weights(&self) -> &[f64] {
        &self.atom_weights
    }

    pub fn num_atoms(&self) -> usize {
        self.atom_weights.len()
    }

    /// `a = Σ ā_i` over the represented atoms.
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    pub fn diffuse_mass(&self) -> f64 {
        (1.0 - self.atom_mass).max(0.0)
    }

    pub fn family(&self) -> Option<&FamilyTag> {
        self.family.as_ref()
    }

    /// Mass of the untruncated atom set: `total_atom_mass` for families,
    /// `a` otherwise.
    pub fn nominal_atom_mass(&self) -> f64 {
        self.family.map_or(self.atom_mass, |f| f.total_atom_mass)
    }

    /// Truncation error carried into probabilities of `k` i.i.d. dishes.
    pub fn truncation_bound(&self, k: usize) -> f64 {
        self.family.map_or(0.0, |f| k as f64 * f.tail_mass)
    }

    /// One dish. Always consumes exactly two uniforms: the first decides
    /// atom against diffuse by `u < a`, the second picks the atom.
    pub fn sample_dish<R: Rng + ?Sized>(&self, rng: &mut R, fresh: &mut FreshCounter) -> Label {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if u < self.atom_mass {
            Label::Atom(self.atom_by_quantile(v))
        } else {
            fresh.next_label()
        }
    }

    fn atom_by_quantile(&self, v: f64) -> usize {
        let target = v * self.atom_mass;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        idx.min(self.atom_weights.len() - 1) + 1
    }

    fn power_sum(&self, s: usize) -> f64 {
        self.atom_weights.iter().map(|w| w.powi(s as i32)).sum()
    }

    /// Sum over pairwise distinct atom indices `j_1, ..., j_{r+ℓ}` of
    /// `ā_{j_1}^{m*_1} ... ā_{j_r}^{m*_r} ā_{j_{r+1}} ... ā_{j_{r+ℓ}}`;
    /// equal to 1 when `r = ℓ = 0`.
    ///
    /// Computed by Möbius inversion over the partition lattice of the
    /// `r + ℓ` positions: positions merged into one block share an atom,
    /// which contributes the power sum `Σ_j ā_j^{(sum of exponents)}`.
    pub fn a_ml(&self, m_star: &[usize], ell: usize) -> Result<f64> {
        if let Some(&bad) = m_star.iter().find(|&&m| m < 2) {
            return Err(Error::arg(format!("m* entries must be >= 2, got {bad}")));
        }
        let t = m_star.len() + ell;
        if t == 0 {
            return Ok(1.0);
        }
        if t > self.num_atoms() {
            return Ok(0.0);
        }
        let mut key_m = m_star.to_vec();
        key_m.sort_unstable();
        let key = (key_m, ell);
        if let Some(&v) = self.power_sums.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let exponents: Vec<usize> = key
            .0
            .iter()
            .copied()
            .chain(std::iter::repeat_n(1, ell))
            .collect();
        let max_exp: usize = exponents.iter().sum();
        let sums: Vec<f64> = (0..=max_exp).map(|s| self.power_sum(s)).collect();
        let mut falling = vec![1.0f64; t + 1];
        for b in 2..=t {
            falling[b] = falling[b - 1] * (b - 1) as f64;
        }
        let mut total = 0.0;
        let mut block_exp = vec![0usize; t];
        let mut block_len = vec![0usize; t];
        for p in PartitionIter::uncapped(t) {
            let k = p.num_blocks();
            block_exp[..k].fill(0);
            block_len[..k].fill(0);
            for (pos, &b) in p.assignment().iter().enumerate() {
                block_exp[b] += exponents[pos];
                block_len[b] += 1;
            }
            let mut term = 1.0;
            for b in 0..k {
                let sign = if block_len[b].is_multiple_of(2) { -1.0 } else { 1.0 };
                term *= sign * falling[block_len[b]] * sums[block_exp[b]];
            }
            total += term;
        }
        let total = clamp_roundoff(total);
        self.power_sums.lock().unwrap().insert(key, total);
        Ok(total)
    }

    /// Probability that `|m|` i.i.d. dishes, split into consecutive groups of
    /// sizes `m_1, ..., m_k`, are equal within each group and different
    /// across groups.
    pub fn h_sharp(&self, m: &[usize]) -> Result<f64> {
        if m.contains(&0) {
            return Err(Error::arg("occupancy entries must be positive"));
        }
        let k = m.len();
        let m_star: Vec<usize> = m.iter().copied().filter(|&x| x > 1).collect();
        let r = m_star.len();
        let diffuse = self.diffuse_mass();
        let mut total = 0.0;
        for ell in 0..=k - r {
            let a = self.a_ml(&m_star, ell)?;
            if a == 0.0 {
                continue;
            }
            total += diffuse.powi((k - ell - r) as i32) * binomial(k - r, ell) * a;
        }
        Ok(clamp_roundoff(total))
    }

    /// Karlin's counting function `α(x) = #{j : a_j >= 1/x}` on the weights
    /// normalized within the atom set.
    pub fn alpha_of(&self, x: f64) -> Result<usize> {
        if !(x > 0.0) {
            return Err(Error::arg(format!("α(x) needs x > 0, got {x}")));
        }
        if let Some(tag) = self.family {
            return Ok(tag.family.alpha(x));
        }
        if self.atom_mass == 0.0 {
            return Err(Error::state("α(x) is undefined without atoms"));
        }
        Ok(self
            .atom_weights
            .iter()
            .filter(|&&w| w / self.atom_mass >= 1.0 / x)
            .count())
    }
}

/// `m ∈ M(n)`: for each block of size `n_i`, a number `1 <= m_i <= n_i` of
/// latent blocks merged into it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyVector {
    n: Vec<usize>,
    m: Vec<usize>,
}

impl OccupancyVector {
    pub fn new(n: Vec<usize>, m: Vec<usize>) -> Result<Self> {
        if n.len() != m.len() {
            return Err(Error::arg("occupancy and size vectors differ in length"));
        }
        if n.iter().zip(&m).any(|(&ni, &mi)| mi == 0 || mi > ni) {
            return Err(Error::arg(format!("{m:?} is not in M({n:?})")));
        }
        Ok(Self { n, m })
    }

    pub(crate) fn new_unchecked(n: Vec<usize>, m: Vec<usize>) -> Self {
        Self { n, m }
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    /// `|m| = Σ m_i`.
    pub fn total(&self) -> usize {
        self.m.iter().sum()
    }

    /// Entries greater than one, in order.
    pub fn m_star(&self) -> Vec<usize> {
        self.m.iter().copied().filter(|&x| x > 1).collect()
    }

    pub fn r(&self) -> usize {
        self.m.iter().filter(|&&x| x > 1).count()
    }
}
