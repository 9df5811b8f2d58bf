//! JSON configuration files for models, base measures and experiments.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::ExperimentSpec;
use crate::basemeasure::{AtomFamily, BaseMeasure};
use crate::eppf::{EppfModel, VTable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EppfConfig {
    PitmanYor {
        sigma: f64,
        theta: f64,
    },
    /// `v_table_file` is resolved relative to the model file.
    Gibbs {
        sigma: f64,
        v_table_file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub eppf: EppfConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseMeasureConfig {
    Atoms {
        atoms: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diffuse: Option<f64>,
    },
    Family {
        #[serde(flatten)]
        family: AtomFamily,
        truncation: usize,
        total_atom_mass: f64,
    },
}

impl BaseMeasureConfig {
    pub fn build(&self) -> Result<BaseMeasure> {
        match self {
            BaseMeasureConfig::Atoms { atoms, diffuse: None } => BaseMeasure::new(atoms.clone()),
            BaseMeasureConfig::Atoms {
                atoms,
                diffuse: Some(d),
            } => BaseMeasure::with_diffuse(atoms.clone(), *d),
            BaseMeasureConfig::Family {
                family,
                truncation,
                total_atom_mass,
            } => BaseMeasure::from_family(*family, *truncation, *total_atom_mass),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasureFile {
    pub base_measure: BaseMeasureConfig,
}

/// Model, base measure and experiment settings in one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub eppf: EppfConfig,
    pub base_measure: BaseMeasureConfig,
    #[serde(flatten)]
    pub experiment: ExperimentSpec,
}

/// Whether a user-supplied V-table must satisfy the Gibbs recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableCheck {
    Validate,
    AsGiven,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Builds the model; `base_dir` anchors relative V-table paths.
pub fn build_model(cfg: &EppfConfig, base_dir: &Path, check: TableCheck) -> Result<EppfModel> {
    match cfg {
        EppfConfig::PitmanYor { sigma, theta } => EppfModel::pitman_yor(*sigma, *theta),
        EppfConfig::Gibbs { sigma, v_table_file } => {
            let path = base_dir.join(v_table_file);
            let table = match check {
                TableCheck::Validate => VTable::read_csv(&path, *sigma)?,
                TableCheck::AsGiven => VTable::read_csv_unchecked(&path, *sigma)?,
            };
            Ok(EppfModel::gibbs(table))
        }
    }
}

fn parent(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

pub fn load_model(path: &Path, check: TableCheck) -> Result<EppfModel> {
    let cfg: ModelConfig = parse(path, &read(path)?)?;
    build_model(&cfg.eppf, parent(path), check)
}

pub fn load_base_measure(path: &Path) -> Result<BaseMeasure> {
    let cfg: BaseMeasureFile = parse(path, &read(path)?)?;
    cfg.base_measure.build()
}

pub fn load_experiment(path: &Path) -> Result<(EppfModel, BaseMeasure, ExperimentSpec)> {
    let cfg: ExperimentConfig = parse(path, &read(path)?)?;
    let model = build_model(&cfg.eppf, parent(path), TableCheck::Validate)?;
    let h = cfg.base_measure.build()?;
    Ok((model, h, cfg.experiment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::Statistic;
    use crate::eppf::PitmanYor;

    #[test]
    fn model_files() {
        let dir = tempfile::tempdir().unwrap();
        let py = dir.path().join("py.json");
        fs::write(&py, r#"{"eppf":{"type":"pitman_yor","sigma":0.5,"theta":1.0}}"#).unwrap();
        let m = load_model(&py, TableCheck::Validate).unwrap();
        assert!((m.ln_eppf(&[2]).unwrap().exp() - 0.25).abs() < 1e-15);

        let table = VTable::from_pitman_yor(&PitmanYor::new(0.5, 1.0).unwrap(), 8).unwrap();
        table.write_csv(&dir.path().join("v.csv")).unwrap();
        let gibbs = dir.path().join("gibbs.json");
        fs::write(&gibbs, r#"{"eppf":{"type":"gibbs","sigma":0.5,"v_table_file":"v.csv"}}"#).unwrap();
        let g = load_model(&gibbs, TableCheck::Validate).unwrap();
        assert!((g.ln_eppf(&[2, 1]).unwrap() - m.ln_eppf(&[2, 1]).unwrap()).abs() < 1e-12);

        fs::write(&py, r#"{"eppf":{"type":"pitman_yor","sigma":1.5,"theta":1.0}}"#).unwrap();
        assert!(load_model(&py, TableCheck::Validate).is_err());
        fs::write(&py, r#"{"eppf":{"type":"dirichlet"}}"#).unwrap();
        assert!(matches!(load_model(&py, TableCheck::Validate), Err(Error::Parse(_))));
        assert!(matches!(
            load_model(&dir.path().join("missing.json"), TableCheck::Validate),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn base_measure_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.json");
        fs::write(&p, r#"{"base_measure":{"atoms":[0.3],"diffuse":0.7}}"#).unwrap();
        assert!((load_base_measure(&p).unwrap().atom_mass() - 0.3).abs() < 1e-15);
        fs::write(&p, r#"{"base_measure":{"atoms":[0.3],"diffuse":0.6}}"#).unwrap();
        assert!(load_base_measure(&p).is_err());
        fs::write(
            &p,
            r#"{"base_measure":{"family":"power_law","exponent":2.0,"truncation":10000,"total_atom_mass":1.0}}"#,
        )
        .unwrap();
        let h = load_base_measure(&p).unwrap();
        assert_eq!(h.num_atoms(), 10_000);
        assert!(h.family().unwrap().tail_mass > 0.0);
        fs::write(
            &p,
            r#"{"base_measure":{"family":"geometric","ratio":0.5,"truncation":20,"total_atom_mass":0.4}}"#,
        )
        .unwrap();
        assert_eq!(load_base_measure(&p).unwrap().num_atoms(), 20);
    }

    #[test]
    fn experiment_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.json");
        fs::write(
            &p,
            r#"{"eppf":{"type":"pitman_yor","sigma":0.5,"theta":1.0},
                "base_measure":{"atoms":[0.3]},
                "replicates":3,"checkpoints":[10,100],"r_max":2,
                "statistics":["merged_ratio","small_blocks"]}"#,
        )
        .unwrap();
        let (_, h, spec) = load_experiment(&p).unwrap();
        assert_eq!(h.num_atoms(), 1);
        assert_eq!(spec.replicates, 3);
        assert_eq!(spec.statistics, vec![Statistic::MergedRatio, Statistic::SmallBlocks]);
        assert_eq!(spec.tolerances.merged_ratio, 0.03);
    }
}
