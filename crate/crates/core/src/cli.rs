//! Command-line interface.
//!
//! Exit codes: 0 success, 1 failed check, 2 invalid input or model,
//! 3 resource cap exceeded.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::asymptotics::{self, ExperimentSpec, Statistic, Tolerances};
use crate::config::{self, TableCheck};
use crate::eppf::{self, stirling_sigma, EppfModel};
use crate::induced::{self, Method};
use crate::partitions::Partition;
use crate::{caps, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "atompart", version, about = "Partitions induced by species sampling with atomic base measures")]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// EPPF of the latent partition at the given block sizes.
    Eppf(EppfArgs),
    /// Probability that observations cluster by value into a given partition.
    Induced(InducedArgs),
    /// Draw observations through the latent partition and i.i.d. dishes.
    Sample(SampleArgs),
    /// Large-n simulation experiment.
    Asymptotics(AsymptoticsArgs),
    /// Generalized Stirling numbers.
    Stirling(StirlingArgs),
    /// Run the built-in invariant checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct Target {
    /// Block sizes, e.g. 2,1.
    #[arg(long, value_delimiter = ',', conflicts_with = "partition")]
    pub sizes: Option<Vec<usize>>,
    /// Partition as JSON, e.g. [[1,3],[2]].
    #[arg(long)]
    pub partition: Option<String>,
}

impl Target {
    fn partition(&self) -> Result<Partition> {
        match (&self.sizes, &self.partition) {
            (Some(s), None) => Partition::from_sizes(s),
            (None, Some(p)) => serde_json::from_str(p).map_err(|e| Error::Parse(format!("--partition: {e}"))),
            _ => Err(Error::arg("give exactly one of --sizes or --partition")),
        }
    }
}

#[derive(Debug, Args)]
pub struct EppfArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub target: Target,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InducedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "base-measure")]
    pub base_measure: PathBuf,
    #[command(flatten)]
    pub target: Target,
    /// general, gibbs, spike_slab or oracle.
    #[arg(long, default_value = "general")]
    pub method: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "base-measure")]
    pub base_measure: PathBuf,
    /// Observations per path.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print partition frequencies instead of one row per path.
    #[arg(long)]
    pub frequencies: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    /// Experiment JSON (model, base measure and experiment settings).
    #[arg(long, conflicts_with_all = ["model", "base_measure"])]
    pub config: Option<PathBuf>,
    /// Model JSON, used with --base-measure instead of --config
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Base measure JSON
    #[arg(long = "base-measure")]
    pub base_measure: Option<PathBuf>,
    /// Comma-separated sample sizes at which to record statistics
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
    /// Largest n; checkpoints are log-spaced up to it when none are given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Independent sample paths (default 10 without --config)
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Path CSV output; the summary JSON goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StirlingArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long)]
    pub n: usize,
    /// Single entry; all k = 1..n when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Also check this model file (V-tables are loaded as given).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ResourceLimit(_) => EXIT_LIMIT,
        Error::InvalidState(_) => EXIT_CHECK_FAILED,
        _ => EXIT_INVALID,
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let threads = cli.threads;
    let work = move || run(cli.command);
    let result = match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(Error::arg(format!("--threads: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Eppf(a) => cmd_eppf(a),
        Command::Induced(a) => cmd_induced(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Asymptotics(a) => cmd_asymptotics(a),
        Command::Stirling(a) => cmd_stirling(a),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string()),
        source,
    }
}

fn emit_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut out = open_output(path)?;
    writeln!(out, "{value}").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

fn cmd_eppf(a: EppfArgs) -> Result<i32> {
    let model = config::load_model(&a.model, TableCheck::Validate)?;
    let p = a.target.partition()?;
    let sizes = p.block_sizes();
    let q = model.eval_eppf(&sizes)?;
    emit_json(a.output.as_deref(), &json!({ "sizes": sizes.sizes(), "q": q }))?;
    Ok(EXIT_OK)
}

/// Agreement tolerance between two exact routes.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;

fn cmd_induced(a: InducedArgs) -> Result<i32> {
    let method: Method = a.method.parse()?;
    let model = config::load_model(&a.model, TableCheck::Validate)?;
    let h = config::load_base_measure(&a.base_measure)?;
    let target = a.target.partition()?;
    let start = Instant::now();
    let p = induced::induced_probability(method, &model, &h, &target)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let other = if method == Method::Oracle { Method::General } else { Method::Oracle };
    // The cross-check is skipped when the second route is out of reach.
    let cross = induced::induced_probability(other, &model, &h, &target).ok().map(|q| {
        let diff = (q.value - p.value).abs();
        json!({ "method": other, "probability": q.value, "abs_diff": diff, "agree": diff <= CROSS_CHECK_TOLERANCE })
    });
    let agree = cross.as_ref().is_none_or(|c| c["agree"] == json!(true));
    emit_json(
        a.output.as_deref(),
        &json!({
            "partition": target,
            "probability": p.value,
            "error_bound": p.error_bound,
            "method": method,
            "wall_time_ms": wall_time_ms,
            "cross_check": cross,
        }),
    )?;
    Ok(if agree { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_sample(a: SampleArgs) -> Result<i32> {
    let model = config::load_model(&a.model, TableCheck::Validate)?;
    let h = config::load_base_measure(&a.base_measure)?;
    let cap = match model {
        EppfModel::Custom(_) => caps::GENERIC_SIMULATION_CAP,
        _ => caps::SAMPLE_CAP,
    };
    if a.n == 0 || a.paths == 0 {
        return Err(Error::arg("--n and --paths must be positive"));
    }
    if a.n > cap {
        return Err(Error::limit(format!("--n {} exceeds the sampling cap {cap}", a.n)));
    }
    let draws: Vec<asymptotics::TwoLevelDraw> = (0..a.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rng.set_stream(i);
            asymptotics::sample_two_level(&model, &h, a.n, &mut rng)
        })
        .collect::<Result<_>>()?;
    let out = open_output(a.output.as_deref())?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    if a.frequencies {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for d in &draws {
            *counts.entry(partition_json(&d.induced)).or_default() += 1;
        }
        w.write_record(["partition", "count", "frequency"]).map_err(csv_err)?;
        for (p, c) in &counts {
            let f = *c as f64 / a.paths as f64;
            w.write_record([p.as_str(), &c.to_string(), &f.to_string()]).map_err(csv_err)?;
        }
    } else {
        w.write_record(["path", "latent_blocks", "merged_blocks", "partition", "labels"])
            .map_err(csv_err)?;
        for (i, d) in draws.iter().enumerate() {
            let labels: Vec<String> = d.labels.iter().map(|l| l.to_string()).collect();
            w.write_record([
                i.to_string(),
                d.latent.num_blocks().to_string(),
                d.induced.num_blocks().to_string(),
                partition_json(&d.induced),
                labels.join(" "),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(a.output.as_deref()))?;
    Ok(EXIT_OK)
}

fn partition_json(p: &Partition) -> String {
    serde_json::to_string(p.blocks()).expect("blocks serialize")
}

fn cmd_asymptotics(a: AsymptoticsArgs) -> Result<i32> {
    let (model, h, mut spec) = match (&a.config, &a.model, &a.base_measure) {
        (Some(c), None, None) => config::load_experiment(c)?,
        (None, Some(m), Some(b)) => {
            let model = config::load_model(m, TableCheck::Validate)?;
            let h = config::load_base_measure(b)?;
            let spec = ExperimentSpec {
                replicates: 10,
                checkpoints: Vec::new(),
                r_max: 5,
                statistics: vec![Statistic::MergedRatio],
                fit_range: None,
                tolerances: Tolerances::default(),
            };
            (model, h, spec)
        }
        _ => return Err(Error::arg("give --config, or both --model and --base-measure")),
    };
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if let Some(c) = a.checkpoints {
        spec.checkpoints = c;
    } else if let Some(n) = a.n {
        spec.checkpoints = asymptotics::log_spaced_checkpoints(n, 10);
    }
    if spec.checkpoints.is_empty() {
        return Err(Error::arg("no checkpoints: give --checkpoints or --n"));
    }
    let report = asymptotics::run_experiment(&model, &h, &spec, a.seed)?;
    if let Some(path) = &a.output {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        asymptotics::write_paths_csv(BufWriter::new(file), &report.paths, spec.r_max)?;
    }
    let summary = serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?;
    emit_json(None, &summary)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_stirling(a: StirlingArgs) -> Result<i32> {
    let value = match a.k {
        Some(k) => json!({ "sigma": a.sigma, "n": a.n, "k": k, "value": stirling_sigma(a.sigma, a.n, k)? }),
        None => {
            let table = eppf::StirlingTable::new(a.sigma, a.n)?;
            let values: Vec<f64> = (1..=a.n).map(|k| table.get(a.n, k)).collect::<Result<_>>()?;
            json!({ "sigma": a.sigma, "n": a.n, "values": values })
        }
    };
    emit_json(a.output.as_deref(), &value)?;
    Ok(EXIT_OK)
}

fn cmd_selfcheck(a: SelfcheckArgs) -> Result<i32> {
    let user = match &a.model {
        Some(p) => Some(config::load_model(p, TableCheck::AsGiven)?),
        None => None,
    };
    let results = crate::selfcheck::run_all(user.as_ref());
    let mut out = open_output(a.output.as_deref())?;
    let mut failed = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => writeln!(out, "PASS {}", r.name),
            Err(msg) => {
                failed += 1;
                writeln!(out, "FAIL {}: {msg}", r.name)
            }
        }
        .map_err(io_err(a.output.as_deref()))?;
    }
    writeln!(out, "{} checks, {failed} failed", results.len()).map_err(io_err(a.output.as_deref()))?;
    out.flush().map_err(io_err(a.output.as_deref()))?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}
