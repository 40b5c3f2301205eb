//! Experiment One (random split) and Experiment Two (several split designs):
//! train the internal baseline per design, generate test imagery for every
//! configured model and evaluate against the targets.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::{write_metrics_csv, Metric};
use crate::mlp::{train_fc, TrainConfig};
use crate::raster::{RasterStack, Sample};
use crate::splits::{make_split, Role, SplitAssignment, SplitDesign};
use crate::stats::{fmt_corr, CorrelationReport};

use super::evaluate::{evaluate, EvalConfig, GeneratedSet};
use super::models::{constant_imagery, mean_reflectance, read_raster_dir, ModelSpec};
use super::report::render_report;
use super::write_run_record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub designs: Vec<SplitDesign>,
    pub models: Vec<ModelSpec>,
    pub split_seed: u64,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::from("dataset"),
            out: PathBuf::from("run"),
            designs: experiment_one_designs(),
            models: vec![ModelSpec::Fc, ModelSpec::MeanPredictor, ModelSpec::Identity],
            split_seed: 0,
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

pub fn experiment_one_designs() -> Vec<SplitDesign> {
    vec![SplitDesign::Random { test_frac: 0.2 }]
}

pub fn experiment_two_designs() -> Vec<SplitDesign> {
    vec![
        SplitDesign::Random { test_frac: 0.2 },
        SplitDesign::Buffered {
            d_min_km: 100.0,
            test_frac: 0.2,
        },
        SplitDesign::HoldoutRegion {
            region: "west".into(),
        },
    ]
}

/// One line of the NDVI summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct NdviRow {
    pub split_design: String,
    pub model_name: String,
    pub bicor_mean: Option<f64>,
    pub bicor_sd: Option<f64>,
    pub n_test: usize,
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub label: String,
    pub split: SplitAssignment,
    /// Smallest train/test distance, for buffered designs.
    pub min_cross_distance_km: Option<f64>,
    pub report: CorrelationReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub designs: Vec<DesignOutcome>,
    /// (design label, reason) for designs that could not be realized.
    pub skipped: Vec<(String, String)>,
    pub report: CorrelationReport,
    pub ndvi: Vec<NdviRow>,
}

pub fn run_experiment_one(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = ExperimentConfig {
        designs: experiment_one_designs(),
        ..cfg.clone()
    };
    run_experiment(&cfg)
}

pub fn run_experiment_two(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = ExperimentConfig {
        designs: experiment_two_designs(),
        ..cfg.clone()
    };
    run_experiment(&cfg)
}

/// Runs every design in `cfg.designs`. Infeasible designs are skipped with
/// a notice; if none is feasible the run fails as infeasible.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.designs.is_empty() || cfg.models.is_empty() {
        return Err(Error::invalid("experiment needs at least one design and one model"));
    }
    let manifest = DatasetManifest::load(&cfg.dataset)?;
    fs::create_dir_all(&cfg.out)?;
    write_run_record(&cfg.out, "experiment", cfg)?;
    let samples = manifest.load_all()?;

    let mut designs = Vec::new();
    let mut skipped = Vec::new();
    for design in &cfg.designs {
        let label = design.label();
        let split = match make_split(&manifest.entries, design, cfg.split_seed) {
            Ok(s) => s,
            Err(Error::Infeasible(msg)) => {
                log::warn!("skipping design {label}: {msg}");
                skipped.push((label, msg));
                continue;
            }
            Err(e) => return Err(e),
        };
        designs.push(run_design(cfg, &samples, design, split)?);
    }
    if designs.is_empty() {
        return Err(Error::Infeasible("no split design is feasible on this dataset".into()));
    }

    let mut report = CorrelationReport::default();
    for d in &designs {
        report.extend(d.report.clone());
    }
    let ndvi = ndvi_table(&designs, cfg);
    render_report(&report, &cfg.out)?;
    write_ndvi_table(cfg.out.join("ndvi_table.csv"), &ndvi)?;
    if !skipped.is_empty() {
        let mut f = BufWriter::new(File::create(cfg.out.join("skipped.txt"))?);
        for (label, msg) in &skipped {
            writeln!(f, "{label}: {msg}")?;
        }
        f.flush()?;
    }
    Ok(ExperimentOutput {
        designs,
        skipped,
        report,
        ndvi,
    })
}

fn run_design(
    cfg: &ExperimentConfig,
    samples: &[Sample],
    design: &SplitDesign,
    split: SplitAssignment,
) -> Result<DesignOutcome> {
    let label = design.label();
    let dir = cfg.out.join(&label);
    fs::create_dir_all(&dir)?;
    split.write_file(dir.join("split.json"))?;

    let min_cross_distance_km = match design {
        SplitDesign::Buffered { d_min_km, .. } => {
            let d = split.min_cross_distance_km(samples);
            if d < *d_min_km {
                return Err(Error::Infeasible(format!(
                    "buffered split has train/test pair {d:.3} km apart, below {d_min_km} km"
                )));
            }
            Some(d)
        }
        _ => None,
    };

    let by_id: BTreeMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let train: Vec<&Sample> = split.ids(Role::Train).iter().map(|id| by_id[id.as_str()]).collect();
    let test: Vec<&Sample> = split.ids(Role::Test).iter().map(|id| by_id[id.as_str()]).collect();
    let targets: Vec<(String, RasterStack)> = test.iter().map(|s| (s.id.clone(), s.imagery.clone())).collect();

    let mut generated = Vec::new();
    for spec in &cfg.models {
        let images: Vec<Option<RasterStack>> = match spec {
            ModelSpec::Fc => {
                log::info!("{label}: training fc on {} samples", train.len());
                let fc = train_fc(samples, &split, &cfg.train)?;
                fc.save(dir.join("fc"))?;
                test.iter().map(|s| fc.predict(&s.conditions).map(Some)).collect::<Result<_>>()?
            }
            ModelSpec::MeanPredictor => {
                let m = mean_reflectance(&train)?;
                test.iter().map(|s| Some(constant_imagery(&s.imagery, m))).collect()
            }
            ModelSpec::Identity => test.iter().map(|s| Some(s.imagery.clone())).collect(),
            ModelSpec::External { dir: ext, .. } => {
                let mut found = read_raster_dir(ext)?;
                test.iter().map(|s| found.remove(&s.id)).collect()
            }
        };
        generated.push(GeneratedSet {
            model_name: spec.name().to_string(),
            images,
        });
    }

    let eval = evaluate(&targets, &generated, &cfg.eval, &label)?;
    write_metrics_csv(dir.join("metrics.csv"), &eval.rows)?;
    eval.report.write_csv(dir.join("correlations.csv"))?;
    Ok(DesignOutcome {
        label,
        split,
        min_cross_distance_km,
        report: eval.report,
    })
}

/// NDVI bicor per (design, model). NDVI does not depend on K, so the first
/// K of the list is used.
fn ndvi_table(designs: &[DesignOutcome], cfg: &ExperimentConfig) -> Vec<NdviRow> {
    let k = cfg.eval.k_list[0];
    let mut out = Vec::new();
    for d in designs {
        for spec in &cfg.models {
            let row = d.report.get(spec.name(), &d.label, k, Metric::NdviMean);
            out.push(NdviRow {
                split_design: d.label.clone(),
                model_name: spec.name().to_string(),
                bicor_mean: row.and_then(|r| r.bicor_mean),
                bicor_sd: row.and_then(|r| r.bicor_sd),
                n_test: d.split.test.len(),
            });
        }
    }
    out
}

pub fn write_ndvi_table(path: impl AsRef<Path>, rows: &[NdviRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["split_design", "model_name", "ndvi_bicor_mean", "ndvi_bicor_sd", "n_test"])?;
    for r in rows {
        w.write_record([
            r.split_design.clone(),
            r.model_name.clone(),
            fmt_corr(r.bicor_mean),
            fmt_corr(r.bicor_sd),
            r.n_test.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
