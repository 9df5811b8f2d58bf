//! Invariant suite behind `atompart selfcheck`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{log_spaced_checkpoints, sample_two_level, simulate_path};
use crate::basemeasure::BaseMeasure;
use crate::eppf::{
    addition_rule_residual, normalization_residual, stirling_by_definition, symmetry_residual, EppfModel,
    PitmanYor, StirlingTable, VTable,
};
use crate::induced::{self, Method};
use crate::partitions::{bell_numbers, enumerate_partitions, Partition};
use crate::Result;

pub struct CheckResult {
    pub name: String,
    pub outcome: std::result::Result<(), String>,
}

type Outcome = std::result::Result<(), String>;

const PY_GRID: [(f64, f64); 4] = [(0.0, 1.0), (0.25, 0.5), (0.5, 1.0), (-0.5, 1.5)];
const SPIKES: [f64; 4] = [0.0, 0.3, 0.7, 1.0];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| Err(e.to_string()))
}

fn grid_models() -> Vec<(String, EppfModel)> {
    PY_GRID
        .iter()
        .map(|&(s, t)| (format!("PY({s},{t})"), EppfModel::pitman_yor(s, t).expect("grid is valid")))
        .collect()
}

fn grid_measures() -> Vec<(String, BaseMeasure)> {
    let mut out: Vec<(String, BaseMeasure)> = SPIKES
        .iter()
        .map(|&a| (format!("a={a}"), BaseMeasure::spike_slab(a).expect("grid is valid")))
        .collect();
    out.push(("atoms (0.2,0.1)".into(), BaseMeasure::new(vec![0.2, 0.1]).expect("valid")));
    out
}

fn bell_counts() -> Result<Outcome> {
    let bell = bell_numbers(8);
    for n in 1..=8 {
        let count = enumerate_partitions(n)?.count() as u128;
        if count != bell[n] {
            return Ok(Err(format!("n={n}: {count} partitions, Bell number {}", bell[n])));
        }
    }
    Ok(Ok(()))
}

fn restriction_counts() -> Result<Outcome> {
    // Every π ∈ P_n has |π| + 1 one-step extensions.
    for n in 1..=6 {
        let mut ext = std::collections::HashMap::<Partition, usize>::new();
        for p in enumerate_partitions(n + 1)? {
            *ext.entry(p.restrict(n)?).or_default() += 1;
        }
        for (p, c) in ext {
            if c != p.num_blocks() + 1 {
                return Ok(Err(format!("{p} has {c} extensions")));
            }
        }
    }
    Ok(Ok(()))
}

fn stirling_definition() -> Result<Outcome> {
    for sigma in [-0.5, 0.0, 0.25, 0.5, 0.9] {
        let table = StirlingTable::new(sigma, 10)?;
        for n in 1..=10 {
            for k in 1..=n {
                let r = table.get(n, k)?;
                let d = stirling_by_definition(sigma, n, k);
                if (r - d).abs() > 1e-9 * d.abs().max(1e-300) {
                    return Ok(Err(format!("S_{sigma}({n},{k}): recursion {r}, definition {d}")));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn stirling_first_kind() -> Result<Outcome> {
    let mut c = vec![vec![0u64; 12]; 12];
    c[0][0] = 1;
    for n in 0..10 {
        for k in 1..=n + 1 {
            c[n + 1][k] = c[n][k - 1] + n as u64 * c[n][k];
        }
    }
    let table = StirlingTable::new(0.0, 10)?;
    for n in 1..=10 {
        for k in 1..=n {
            if table.get(n, k)? != c[n][k] as f64 {
                return Ok(Err(format!("S_0({n},{k}) = {} != {}", table.get(n, k)?, c[n][k])));
            }
        }
    }
    Ok(Ok(()))
}

fn eppf_rules() -> Result<Outcome> {
    for (name, m) in grid_models() {
        let add = addition_rule_residual(&m, 7)?;
        let sym = symmetry_residual(&m, 7)?;
        let norm = (1..=7).map(|n| normalization_residual(&m, n)).try_fold(0f64, |w, r| r.map(|r| w.max(r)))?;
        if add > 1e-12 || sym > 1e-12 || norm > 1e-12 {
            return Ok(Err(format!(
                "{name}: addition {add:e}, symmetry {sym:e}, normalization {norm:e}"
            )));
        }
    }
    Ok(Ok(()))
}

fn vtable_recursion(v: &VTable) -> Outcome {
    v.validate().map_err(|e| e.to_string())
}

fn builtin_vtables() -> Result<Outcome> {
    for &(s, t) in &PY_GRID {
        let v = VTable::from_pitman_yor(&PitmanYor::new(s, t)?, 30)?;
        if let Err(e) = vtable_recursion(&v) {
            return Ok(Err(format!("PY({s},{t}): {e}")));
        }
    }
    Ok(Ok(()))
}

fn induced_normalization(models: &[(String, EppfModel)], n_max: usize) -> Result<Outcome> {
    for (mn, m) in models {
        for (hn, h) in grid_measures() {
            let top = m.n_limit().map_or(n_max, |l| l.min(n_max));
            for n in 1..=top {
                let mut total = 0.0;
                for p in enumerate_partitions(n)? {
                    total += induced::induced_eppf_general(m, &h, &p.block_sizes())?.value;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Ok(Err(format!("{mn}, {hn}, n={n}: total {total}")));
                }
            }
        }
    }
    Ok(Ok(()))
}

fn route_agreement() -> Result<Outcome> {
    for (mn, m) in grid_models() {
        for (hn, h) in grid_measures() {
            for n in 1..=5 {
                for p in enumerate_partitions(n)? {
                    let g = induced::induced_probability(Method::General, &m, &h, &p)?.value;
                    let mut others = vec![
                        (Method::Gibbs, induced::induced_probability(Method::Gibbs, &m, &h, &p)?.value),
                        (Method::Oracle, induced::oracle_induced_eppf(&m, &h, &p)?),
                    ];
                    if h.num_atoms() <= 1 {
                        let v = induced::induced_probability(Method::SpikeSlab, &m, &h, &p)?.value;
                        others.push((Method::SpikeSlab, v));
                    }
                    for (method, v) in others {
                        if (v - g).abs() > 1e-10 {
                            return Ok(Err(format!("{mn}, {hn}, {p}: general {g}, {method} {v}")));
                        }
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}

fn induced_consistency() -> Result<Outcome> {
    let m = EppfModel::pitman_yor(0.5, 1.0)?;
    let h = BaseMeasure::new(vec![0.2, 0.1])?;
    for n in 1..=5 {
        let mut sums = std::collections::HashMap::<Partition, f64>::new();
        for p in enumerate_partitions(n + 1)? {
            *sums.entry(p.restrict(n)?).or_default() += induced::induced_eppf_general(&m, &h, &p.block_sizes())?.value;
        }
        for (p, s) in sums {
            let direct = induced::induced_eppf_general(&m, &h, &p.block_sizes())?.value;
            if (s - direct).abs() > 1e-9 {
                return Ok(Err(format!("{p}: extensions sum to {s}, direct {direct}")));
            }
        }
    }
    Ok(Ok(()))
}

fn joint_atom_law() -> Result<Outcome> {
    // Summing over all atom tuples gives the probability that every
    // observation is atomic: Σ_π q(π) a^{|π|}.
    let m = EppfModel::pitman_yor(0.25, 0.5)?;
    let h = BaseMeasure::new(vec![0.2, 0.1])?;
    let a = h.atom_mass();
    for n in 1..=4 {
        let mut total = 0.0;
        for code in 0..(1usize << n) {
            let labels: Vec<usize> = (0..n).map(|i| 1 + ((code >> i) & 1)).collect();
            total += induced::joint_atom_probability(&m, &h, &labels)?;
        }
        let mut expected = 0.0;
        for p in enumerate_partitions(n)? {
            expected += m.eval_eppf(&p.block_sizes())? * a.powi(p.num_blocks() as i32);
        }
        if (total - expected).abs() > 1e-12 {
            return Ok(Err(format!("n={n}: {total} vs {expected}")));
        }
    }
    Ok(Ok(()))
}

fn path_identities() -> Result<Outcome> {
    let cps = log_spaced_checkpoints(20_000, 5);
    for (mn, m) in grid_models() {
        for (hn, h) in grid_measures() {
            let p = simulate_path(&m, &h, &cps, 5, 2024, 0)?;
            if let Some(v) = p.identity_violations().first() {
                return Ok(Err(format!("{mn}, {hn}: {v}")));
            }
        }
    }
    Ok(Ok(()))
}

fn sampler_law() -> Result<Outcome> {
    let m = EppfModel::pitman_yor(0.5, 1.0)?;
    let h = BaseMeasure::spike_slab(0.3)?;
    let draws = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = std::collections::HashMap::<Partition, usize>::new();
    for _ in 0..draws {
        *counts.entry(sample_two_level(&m, &h, 3, &mut rng)?.induced).or_default() += 1;
    }
    for p in enumerate_partitions(3)? {
        let exact = induced::induced_eppf_general(&m, &h, &p.block_sizes())?.value;
        let freq = counts.get(&p).copied().unwrap_or(0) as f64 / draws as f64;
        let band = 4.0 * (exact * (1.0 - exact) / draws as f64).sqrt();
        if (freq - exact).abs() > band {
            return Ok(Err(format!("{p}: frequency {freq}, exact {exact}")));
        }
    }
    Ok(Ok(()))
}

fn user_checks(m: &EppfModel, out: &mut Vec<CheckResult>) {
    let mut push = |name: &str, outcome: Outcome| {
        out.push(CheckResult {
            name: format!("user model: {name}"),
            outcome,
        })
    };
    if let EppfModel::Gibbs(v) = m {
        push("V-table recursion", vtable_recursion(v));
    }
    let top = m.n_limit().map_or(7, |l| l.saturating_sub(1).min(7));
    push(
        "EPPF addition rule",
        lift(addition_rule_residual(m, top).map(|r| ensure(r <= 1e-9, || format!("residual {r:e}")))),
    );
    push(
        "induced normalization",
        lift(induced_normalization(&[("user".to_string(), m.clone())], top.min(6))),
    );
}

/// Runs every check; a user model adds its own checks.
pub fn run_all(user: Option<&EppfModel>) -> Vec<CheckResult> {
    let checks: [(&str, fn() -> Result<Outcome>); 13] = [
        ("partition enumeration counts Bell numbers", bell_counts),
        ("restriction extension counts", restriction_counts),
        ("Stirling recursion matches definition", stirling_definition),
        ("Stirling sigma=0 is first kind", stirling_first_kind),
        ("EPPF addition rule, symmetry, normalization", eppf_rules),
        ("V-table recursion", builtin_vtables),
        ("induced normalization", || induced_normalization(&grid_models(), 6)),
        ("induced route agreement", route_agreement),
        ("induced consistency under restriction", induced_consistency),
        ("joint atom law", joint_atom_law),
        ("path identities", path_identities),
        ("sampler matches exact law", sampler_law),
        ("caps", caps_check),
    ];
    let mut out: Vec<CheckResult> = checks
        .iter()
        .map(|(name, f)| CheckResult {
            name: name.to_string(),
            outcome: lift(f()),
        })
        .collect();
    if let Some(m) = user {
        user_checks(m, &mut out);
    }
    out
}

fn caps_check() -> Result<Outcome> {
    let m = EppfModel::pitman_yor(0.5, 1.0)?;
    let h = BaseMeasure::spike_slab(0.3)?;
    let big = Partition::from_sizes(&[crate::caps::oracle_cap() + 1])?;
    Ok(ensure(
        matches!(induced::oracle_induced_eppf(&m, &h, &big), Err(crate::Error::ResourceLimit(_))),
        || "oracle accepted n above its cap".into(),
    ))
}
