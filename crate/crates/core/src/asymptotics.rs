//! Large-`n` simulation of the two-level restaurant and the statistics of
//! the merged partition `Π̃_n`: cluster counts, small-block counts, their
//! normalizers, and Karlin's classification of atom families.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::basemeasure::{AtomFamily, BaseMeasure, FreshCounter, Label};
use crate::caps;
use crate::eppf::{inverse_cdf, EppfModel, VTable};
use crate::numeric::{ln_factorial, zeta};
use crate::partitions::{induced_partition, BlockSizes, Partition};
use crate::{Error, Result};

/// Counts recorded after the `n`-th customer is seated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    /// `K_n`, tables of the latent partition.
    pub latent_blocks: usize,
    /// `N_n`, tables serving a diffuse dish.
    pub diffuse_tables: usize,
    /// Tables serving an atom.
    pub atom_tables: usize,
    /// `Λ_n`, distinct atoms served.
    pub distinct_atoms: usize,
    /// `|Π̃_n|`, counted directly from the merged clusters.
    pub merged: usize,
    /// `Σ_r r 𝒦_r(Π̃_n)` over all `r`.
    pub block_mass: usize,
    /// `𝒦_1, ..., 𝒦_{r_max}`.
    pub small_blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub seed: u64,
    pub stream: u64,
    pub r_max: usize,
    pub checkpoints: Vec<Checkpoint>,
}

impl SamplePath {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("paths have at least one checkpoint")
    }

    /// Descriptions of every broken bookkeeping identity; empty when the
    /// path is consistent.
    pub fn identity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut prev_k = 0;
        for c in &self.checkpoints {
            if c.merged != c.diffuse_tables + c.distinct_atoms {
                out.push(format!(
                    "n={}: merged {} != N {} + Lambda {}",
                    c.n, c.merged, c.diffuse_tables, c.distinct_atoms
                ));
            }
            if c.block_mass != c.n {
                out.push(format!("n={}: sum r K_r = {} != n", c.n, c.block_mass));
            }
            if c.diffuse_tables + c.atom_tables != c.latent_blocks {
                out.push(format!(
                    "n={}: N {} + atom tables {} != K {}",
                    c.n, c.diffuse_tables, c.atom_tables, c.latent_blocks
                ));
            }
            if c.latent_blocks < prev_k {
                out.push(format!("n={}: K decreased", c.n));
            }
            prev_k = c.latent_blocks;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dish {
    Atom(usize),
    Fresh,
}

enum Seating {
    PitmanYor {
        sigma: f64,
        theta: f64,
        max_blocks: Option<usize>,
    },
    Gibbs(Arc<VTable>),
    Generic(EppfModel),
}

impl Seating {
    fn new(model: &EppfModel) -> Self {
        match model {
            EppfModel::PitmanYor(py) => Seating::PitmanYor {
                sigma: py.sigma(),
                theta: py.theta(),
                max_blocks: py.max_blocks(),
            },
            EppfModel::Gibbs(v) => Seating::Gibbs(Arc::clone(v)),
            EppfModel::Custom(_) => Seating::Generic(model.clone()),
        }
    }

    fn n_cap(&self) -> usize {
        match self {
            Seating::PitmanYor { .. } => caps::SIMULATION_CAP,
            Seating::Gibbs(v) => v.n_max().min(caps::SIMULATION_CAP),
            Seating::Generic(_) => caps::GENERIC_SIMULATION_CAP,
        }
    }
}

/// Restaurant state after `n` customers.
struct Restaurant<'a> {
    h: &'a BaseMeasure,
    seating: Seating,
    table_size: Vec<usize>,
    table_dish: Vec<Dish>,
    // table of every customer who joined an occupied table
    joiners: Vec<u32>,
    // merged cluster sizes of atom dishes, indexed by atom
    atom_count: Vec<usize>,
    // hist[s] = number of merged clusters of size s
    hist: Vec<usize>,
    clusters: usize,
    diffuse_tables: usize,
    distinct_atoms: usize,
    n: usize,
    fresh: FreshCounter,
}

impl<'a> Restaurant<'a> {
    fn new(model: &EppfModel, h: &'a BaseMeasure, n_max: usize) -> Self {
        Self {
            h,
            seating: Seating::new(model),
            table_size: Vec::new(),
            table_dish: Vec::new(),
            joiners: Vec::with_capacity(n_max),
            atom_count: vec![0; h.num_atoms()],
            hist: vec![0; n_max + 2],
            clusters: 0,
            diffuse_tables: 0,
            distinct_atoms: 0,
            n: 0,
            fresh: FreshCounter::default(),
        }
    }

    fn k(&self) -> usize {
        self.table_size.len()
    }

    /// Table for the next customer, or `k` for a new one.
    fn choose_table<R: Rng>(&self, rng: &mut R) -> Result<usize> {
        let n = self.n;
        let k = self.k();
        if n == 0 {
            return Ok(0);
        }
        let sigma;
        let p_new = match &self.seating {
            Seating::PitmanYor {
                sigma: s,
                theta,
                max_blocks,
            } => {
                sigma = *s;
                if max_blocks.is_some_and(|m| k >= m) {
                    0.0
                } else {
                    (theta + s * k as f64) / (theta + n as f64)
                }
            }
            Seating::Gibbs(v) => {
                sigma = v.sigma();
                let here = v.ln_v(n, k)?;
                (v.ln_v(n + 1, k + 1)? - here).exp()
            }
            Seating::Generic(model) => {
                let w = model.predictive_weights(&BlockSizes::new(self.table_size.clone())?)?;
                return Ok(inverse_cdf(&w, rng.random::<f64>()));
            }
        };
        let u: f64 = rng.random();
        if u < p_new {
            return Ok(k);
        }
        // Existing table j has weight n_j - σ = (n_j - 1) + (1 - σ): either a
        // uniformly chosen joiner's table or a uniformly chosen table.
        let joined = (n - k) as f64;
        let x = (u - p_new) / (1.0 - p_new) * (joined + k as f64 * (1.0 - sigma));
        if x < joined {
            let i = (x as usize).min(n - k - 1);
            Ok(self.joiners[i] as usize)
        } else {
            Ok((((x - joined) / (1.0 - sigma)) as usize).min(k - 1))
        }
    }

    fn grow_cluster(&mut self, before: usize) {
        if before == 0 {
            self.clusters += 1;
        } else {
            self.hist[before] -= 1;
        }
        self.hist[before + 1] += 1;
    }

    fn seat<R: Rng, D: Rng>(&mut self, seat_rng: &mut R, dish_rng: &mut D) -> Result<()> {
        let t = self.choose_table(seat_rng)?;
        if t == self.k() {
            let dish = match self.h.sample_dish(dish_rng, &mut self.fresh) {
                Label::Atom(j) => Dish::Atom(j - 1),
                Label::Fresh(_) => Dish::Fresh,
            };
            self.table_size.push(1);
            self.table_dish.push(dish);
            match dish {
                Dish::Fresh => {
                    self.diffuse_tables += 1;
                    self.grow_cluster(0);
                }
                Dish::Atom(j) => {
                    let before = self.atom_count[j];
                    if before == 0 {
                        self.distinct_atoms += 1;
                    }
                    self.atom_count[j] += 1;
                    self.grow_cluster(before);
                }
            }
        } else {
            self.joiners.push(t as u32);
            let before_table = self.table_size[t];
            self.table_size[t] += 1;
            let before = match self.table_dish[t] {
                Dish::Fresh => before_table,
                Dish::Atom(j) => {
                    self.atom_count[j] += 1;
                    self.atom_count[j] - 1
                }
            };
            self.grow_cluster(before);
        }
        self.n += 1;
        Ok(())
    }

    fn checkpoint(&self, r_max: usize) -> Checkpoint {
        let upto = self.n.min(self.hist.len() - 1);
        Checkpoint {
            n: self.n,
            latent_blocks: self.k(),
            diffuse_tables: self.diffuse_tables,
            atom_tables: self.k() - self.diffuse_tables,
            distinct_atoms: self.distinct_atoms,
            merged: self.clusters,
            block_mass: (1..=upto).map(|s| s * self.hist[s]).sum(),
            small_blocks: (1..=r_max).map(|r| self.hist.get(r).copied().unwrap_or(0)).collect(),
        }
    }
}

fn stream_rngs(seed: u64, stream: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut seat = ChaCha8Rng::seed_from_u64(seed);
    seat.set_stream(2 * stream);
    let mut dish = ChaCha8Rng::seed_from_u64(seed);
    dish.set_stream(2 * stream + 1);
    (seat, dish)
}

fn validate_checkpoints(checkpoints: &[usize], cap: usize) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] == 0 {
        return Err(Error::arg("checkpoints must be a non-empty list of positive integers"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("checkpoints must be strictly increasing"));
    }
    let last = *checkpoints.last().unwrap();
    if last > cap {
        return Err(Error::limit(format!(
            "simulating {last} customers exceeds the cap {cap} for this model"
        )));
    }
    Ok(())
}

/// One restaurant trajectory with dishes. Seating and dish draws use
/// separate streams derived from `(seed, stream)`, so changing the base
/// measure leaves the latent partition untouched.
pub fn simulate_path(
    model: &EppfModel,
    h: &BaseMeasure,
    checkpoints: &[usize],
    r_max: usize,
    seed: u64,
    stream: u64,
) -> Result<SamplePath> {
    if r_max == 0 {
        return Err(Error::arg("r_max must be at least 1"));
    }
    let seating = Seating::new(model);
    validate_checkpoints(checkpoints, seating.n_cap())?;
    let n_max = *checkpoints.last().unwrap();
    let (mut seat_rng, mut dish_rng) = stream_rngs(seed, stream);
    let mut r = Restaurant::new(model, h, n_max);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    while let Some(&&target) = next.peek() {
        r.seat(&mut seat_rng, &mut dish_rng)?;
        if r.n == target {
            out.push(r.checkpoint(r_max));
            next.next();
        }
    }
    Ok(SamplePath {
        seed,
        stream,
        r_max,
        checkpoints: out,
    })
}

/// Roughly `per_decade` log-spaced integers from 1 to `n_max`, always
/// including `n_max`.
pub fn log_spaced_checkpoints(n_max: usize, per_decade: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if n_max == 0 {
        return out;
    }
    let steps = ((n_max as f64).log10() * per_decade as f64).ceil() as usize;
    for i in 0..=steps {
        let v = 10f64.powf(i as f64 / per_decade as f64).round() as usize;
        let v = v.min(n_max);
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Latent partition, dish labels and merged partition of one draw of `n`
/// observations: latent partition first, then one dish per latent block.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelDraw {
    pub latent: Partition,
    pub labels: Vec<Label>,
    pub induced: Partition,
}

impl TwoLevelDraw {
    /// The path statistics of this draw, counted from the partitions and
    /// labels.
    pub fn checkpoint(&self, r_max: usize) -> Checkpoint {
        let n = self.latent.n();
        let mut block_label = Vec::with_capacity(self.latent.num_blocks());
        for b in self.latent.blocks() {
            block_label.push(self.labels[b[0] - 1]);
        }
        let diffuse_tables = block_label.iter().filter(|l| matches!(l, Label::Fresh(_))).count();
        let mut atoms: Vec<usize> = block_label
            .iter()
            .filter_map(|l| match l {
                Label::Atom(j) => Some(*j),
                Label::Fresh(_) => None,
            })
            .collect();
        atoms.sort_unstable();
        atoms.dedup();
        let sizes = self.induced.block_sizes();
        Checkpoint {
            n,
            latent_blocks: self.latent.num_blocks(),
            diffuse_tables,
            atom_tables: self.latent.num_blocks() - diffuse_tables,
            distinct_atoms: atoms.len(),
            merged: self.induced.num_blocks(),
            block_mass: sizes.n(),
            small_blocks: (1..=r_max)
                .map(|r| sizes.sizes().iter().filter(|&&s| s == r).count())
                .collect(),
        }
    }
}

pub fn sample_two_level<R: Rng + ?Sized>(
    model: &EppfModel,
    h: &BaseMeasure,
    n: usize,
    rng: &mut R,
) -> Result<TwoLevelDraw> {
    let latent = model.sample_latent_partition(n, rng)?;
    let mut fresh = FreshCounter::default();
    let dishes: Vec<Label> = (0..latent.num_blocks()).map(|_| h.sample_dish(rng, &mut fresh)).collect();
    let labels: Vec<Label> = latent.assignment().into_iter().map(|b| dishes[b]).collect();
    let induced = induced_partition(&labels)?;
    Ok(TwoLevelDraw {
        latent,
        labels,
        induced,
    })
}

/// Slowly varying factor of a normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SlowlyVarying {
    Constant { value: f64 },
    /// `scale * ln(shift * x)`.
    Log { scale: f64, shift: f64 },
}

impl SlowlyVarying {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SlowlyVarying::Constant { value } => value,
            SlowlyVarying::Log { scale, shift } => scale * (shift * x).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Normalizer {
    Constant,
    LogN,
    Power { sigma: f64 },
    PowerSlowly { sigma0: f64, ell0: SlowlyVarying },
}

impl Normalizer {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            Normalizer::Constant => 1.0,
            Normalizer::LogN => n.ln(),
            Normalizer::Power { sigma } => n.powf(sigma),
            Normalizer::PowerSlowly { sigma0, ell0 } => n.powf(sigma0) * ell0.eval(n),
        }
    }
}

/// `c_n` for a Gibbs-type partition with parameter `σ`.
pub fn gibbs_normalizer(sigma: f64) -> Result<Normalizer> {
    if !(sigma < 1.0) || sigma.is_nan() {
        return Err(Error::arg(format!("sigma must be < 1, got {sigma}")));
    }
    Ok(if sigma < 0.0 {
        Normalizer::Constant
    } else if sigma == 0.0 {
        Normalizer::LogN
    } else {
        Normalizer::Power { sigma }
    })
}

/// Growth of the number of distinct atoms among i.i.d. draws from `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum KarlinRegime {
    /// Finitely many atoms: the count saturates.
    FiniteSupport { atoms: usize },
    /// `α(x) = x^{σ₀} ℓ₀*(x)`; distinct atoms grow like `z₀ n^{σ₀} ℓ₀(n)`.
    Regular {
        sigma0: f64,
        ell0: SlowlyVarying,
        z0: f64,
    },
}

impl KarlinRegime {
    pub fn sigma0(&self) -> f64 {
        match *self {
            KarlinRegime::FiniteSupport { .. } => 0.0,
            KarlinRegime::Regular { sigma0, .. } => sigma0,
        }
    }

    /// `b_n = n^{σ₀} ℓ₀(n)`.
    pub fn normalizer(&self) -> Option<Normalizer> {
        match *self {
            KarlinRegime::FiniteSupport { .. } => None,
            KarlinRegime::Regular { sigma0, ell0, .. } => Some(Normalizer::PowerSlowly { sigma0, ell0 }),
        }
    }
}

/// `(σ₀, ℓ₀, z₀)` for a parametric atom family, with `ℓ₀(x) = ℓ₀*(a x)` and
/// `z₀ = a^{σ₀} Γ(1 - σ₀)`, `a` the total atom mass.
pub fn karlin_regime(h: &BaseMeasure) -> Result<KarlinRegime> {
    let Some(tag) = h.family() else {
        return Ok(KarlinRegime::FiniteSupport { atoms: h.num_atoms() });
    };
    let a = tag.total_atom_mass;
    Ok(match tag.family {
        AtomFamily::PowerLaw { exponent } => {
            // α(x) = ⌊(x / ζ(s))^{1/s}⌋
            let sigma0 = 1.0 / exponent;
            KarlinRegime::Regular {
                sigma0,
                ell0: SlowlyVarying::Constant {
                    value: zeta(exponent).powf(-sigma0),
                },
                z0: a.powf(sigma0) * gamma(1.0 - sigma0),
            }
        }
        AtomFamily::Geometric { ratio } => KarlinRegime::Regular {
            // α(x) ~ ln x / ln(1/ρ)
            sigma0: 0.0,
            ell0: SlowlyVarying::Log {
                scale: 1.0 / (1.0 / ratio).ln(),
                shift: a,
            },
            z0: 1.0,
        },
    })
}

/// `σ Γ(r - σ) / (Γ(1 - σ) r!)`: limit of `𝒦_r(Π̃_n) / |Π̃_n|` when `a < 1`.
pub fn kr_limit_constant(sigma: f64, r: usize) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::arg(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if r == 0 {
        return Err(Error::arg("r must be at least 1"));
    }
    Ok(sigma * (ln_gamma(r as f64 - sigma) - ln_gamma(1.0 - sigma) - ln_factorial(r)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `|Π̃_n| / K_n` at the last checkpoint; target `1 - a`.
    MergedRatio,
    /// Least-squares slope of `log |Π̃_n|` on `log n`; target `σ` if
    /// `a < 1`, `σ σ₀` if `a = 1`.
    Slope,
    /// `𝒦_r(Π̃_n) / |Π̃_n|` at the last checkpoint; target `kr_limit_constant`.
    SmallBlocks,
    /// Fraction of replicates with `|Π̃_n| = |X_0|` at the last checkpoint.
    Saturation,
    /// `K_n / log n` at the last checkpoint for Dirichlet latent
    /// partitions; target `θ`.
    LatentDiversity,
    /// Fraction of checkpoints with `K_n >= 1000` where `N_n / K_n` lies
    /// within `4 sqrt(a(1-a)/K_n)` of `1 - a`.
    DiffuseTables,
}

fn default_r_max() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::default_ratio")]
    pub merged_ratio: f64,
    #[serde(default = "Tolerances::default_slope")]
    pub slope: f64,
    /// Tolerance for `𝒦_1`; later entries for `r = 2, 3, ...`, the last
    /// entry repeating.
    #[serde(default = "Tolerances::default_small_blocks")]
    pub small_blocks: Vec<f64>,
    #[serde(default = "Tolerances::default_saturation")]
    pub saturation_min_fraction: f64,
    #[serde(default = "Tolerances::default_diversity")]
    pub latent_diversity: f64,
    #[serde(default = "Tolerances::default_diffuse")]
    pub diffuse_tables_min_fraction: f64,
}

impl Tolerances {
    fn default_ratio() -> f64 {
        0.03
    }
    fn default_slope() -> f64 {
        0.05
    }
    fn default_small_blocks() -> Vec<f64> {
        vec![0.05, 0.03]
    }
    fn default_saturation() -> f64 {
        0.95
    }
    fn default_diversity() -> f64 {
        0.8
    }
    fn default_diffuse() -> f64 {
        0.99
    }

    fn small_block(&self, r: usize) -> f64 {
        let t = &self.small_blocks;
        t.get(r - 1).or(t.last()).copied().unwrap_or(0.05)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            merged_ratio: Self::default_ratio(),
            slope: Self::default_slope(),
            small_blocks: Self::default_small_blocks(),
            saturation_min_fraction: Self::default_saturation(),
            latent_diversity: Self::default_diversity(),
            diffuse_tables_min_fraction: Self::default_diffuse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub replicates: usize,
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    pub statistics: Vec<Statistic>,
    /// Inclusive `[lo, hi]` range of `n` for the slope fit; defaults to the
    /// top decade of checkpoints.
    #[serde(default)]
    pub fit_range: Option<[usize; 2]>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticReport {
    pub statistic: Statistic,
    /// Block size for small-block statistics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub estimate: f64,
    pub standard_error: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub replicates: usize,
    pub checkpoints: Vec<usize>,
    pub statistics: Vec<StatisticReport>,
    pub identity_violations: usize,
    pub pass: bool,
    #[serde(skip)]
    pub paths: Vec<SamplePath>,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::arg("a slope needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("a slope needs two distinct x values"));
    }
    Ok(sxy / sxx)
}

/// Slope of `log |Π̃_n|` on `log n` over checkpoints with `lo <= n <= hi`.
pub fn merged_slope(path: &SamplePath, lo: usize, hi: usize) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = path
        .checkpoints
        .iter()
        .filter(|c| c.n >= lo && c.n <= hi)
        .map(|c| ((c.n as f64).ln(), (c.merged as f64).ln()))
        .unzip();
    ols_slope(&xs, &ys)
}

fn report(statistic: Statistic, r: Option<usize>, xs: &[f64], target: f64, tolerance: f64) -> StatisticReport {
    let (estimate, standard_error) = mean_and_se(xs);
    StatisticReport {
        statistic,
        r,
        estimate,
        standard_error,
        target,
        tolerance,
        pass: (estimate - target).abs() <= tolerance,
    }
}

fn fraction_report(statistic: Statistic, hits: usize, total: usize, min_fraction: f64) -> StatisticReport {
    let p = hits as f64 / total as f64;
    StatisticReport {
        statistic,
        r: None,
        estimate: p,
        standard_error: (p * (1.0 - p) / total as f64).sqrt(),
        target: 1.0,
        tolerance: 1.0 - min_fraction,
        pass: p >= min_fraction,
    }
}

/// Runs `spec.replicates` independent paths in parallel (replicate `i`
/// uses stream `i` of `seed`) and aggregates the requested statistics.
pub fn run_experiment(
    model: &EppfModel,
    h: &BaseMeasure,
    spec: &ExperimentSpec,
    seed: u64,
) -> Result<ExperimentReport> {
    if spec.replicates == 0 {
        return Err(Error::arg("replicates must be positive"));
    }
    let paths: Vec<SamplePath> = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|i| simulate_path(model, h, &spec.checkpoints, spec.r_max, seed, i))
        .collect::<Result<_>>()?;
    let n_last = *spec.checkpoints.last().unwrap();
    let a = h.atom_mass();
    let sigma = model.gibbs_sigma();
    let t = &spec.tolerances;
    let mut stats = Vec::new();
    for &st in &spec.statistics {
        match st {
            Statistic::MergedRatio => {
                let xs: Vec<f64> = paths
                    .iter()
                    .map(|p| p.last().merged as f64 / p.last().latent_blocks as f64)
                    .collect();
                stats.push(report(st, None, &xs, 1.0 - a, t.merged_ratio));
            }
            Statistic::Slope => {
                let sigma = sigma.ok_or_else(|| Error::Unsupported("slope target needs a Gibbs-type model".into()))?;
                let [lo, hi] = spec.fit_range.unwrap_or([n_last.div_ceil(10), n_last]);
                let target = if h.nominal_atom_mass() < 1.0 {
                    sigma
                } else {
                    sigma * karlin_regime(h)?.sigma0()
                };
                let xs: Vec<f64> = paths.iter().map(|p| merged_slope(p, lo, hi)).collect::<Result<_>>()?;
                stats.push(report(st, None, &xs, target, t.slope));
            }
            Statistic::SmallBlocks => {
                let sigma = sigma.ok_or_else(|| Error::Unsupported("small-block targets need a Gibbs-type model".into()))?;
                if h.nominal_atom_mass() >= 1.0 {
                    return Err(Error::Unsupported("small-block targets need a < 1".into()));
                }
                for r in 1..=spec.r_max {
                    let xs: Vec<f64> = paths
                        .iter()
                        .map(|p| p.last().small_blocks[r - 1] as f64 / p.last().merged as f64)
                        .collect();
                    stats.push(report(st, Some(r), &xs, kr_limit_constant(sigma, r)?, t.small_block(r)));
                }
            }
            Statistic::Saturation => {
                if h.family().is_some() || h.num_atoms() == 0 {
                    return Err(Error::Unsupported("saturation needs finitely many atoms".into()));
                }
                let hits = paths.iter().filter(|p| p.last().merged == h.num_atoms()).count();
                stats.push(fraction_report(st, hits, paths.len(), t.saturation_min_fraction));
            }
            Statistic::LatentDiversity => {
                let theta = match model {
                    EppfModel::PitmanYor(py) if py.sigma() == 0.0 => py.theta(),
                    _ => {
                        return Err(Error::Unsupported(
                            "latent diversity has a deterministic target only for Pitman-Yor with sigma = 0".into(),
                        ))
                    }
                };
                let c = Normalizer::LogN.eval(n_last as f64);
                let xs: Vec<f64> = paths.iter().map(|p| p.last().latent_blocks as f64 / c).collect();
                stats.push(report(st, None, &xs, theta, t.latent_diversity));
            }
            Statistic::DiffuseTables => {
                let band = |k: usize| 4.0 * (a * (1.0 - a) / k as f64).sqrt();
                let (mut hits, mut total) = (0, 0);
                for c in paths.iter().flat_map(|p| &p.checkpoints).filter(|c| c.latent_blocks >= 1000) {
                    total += 1;
                    let frac = c.diffuse_tables as f64 / c.latent_blocks as f64;
                    if (frac - (1.0 - a)).abs() <= band(c.latent_blocks) {
                        hits += 1;
                    }
                }
                if total == 0 {
                    return Err(Error::arg("diffuse_tables needs checkpoints with K_n >= 1000"));
                }
                stats.push(fraction_report(st, hits, total, t.diffuse_tables_min_fraction));
            }
        }
    }
    let identity_violations = paths.iter().map(|p| p.identity_violations().len()).sum();
    let pass = identity_violations == 0 && stats.iter().all(|s| s.pass);
    Ok(ExperimentReport {
        seed,
        replicates: spec.replicates,
        checkpoints: spec.checkpoints.clone(),
        statistics: stats,
        identity_violations,
        pass,
        paths,
    })
}

/// Tidy CSV: one row per replicate and checkpoint.
pub fn write_paths_csv<W: Write>(out: W, paths: &[SamplePath], r_max: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["replicate", "n", "K_n", "N_n", "Lambda_n", "merged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=r_max).map(|r| format!("k{r}")));
    w.write_record(&header).map_err(csv_err)?;
    for p in paths {
        for c in &p.checkpoints {
            let mut row = vec![
                p.stream.to_string(),
                c.n.to_string(),
                c.latent_blocks.to_string(),
                c.diffuse_tables.to_string(),
                c.distinct_atoms.to_string(),
                c.merged.to_string(),
            ];
            row.extend((0..r_max).map(|r| c.small_blocks.get(r).copied().unwrap_or(0).to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
