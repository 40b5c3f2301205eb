//! Robust biweight midcorrelation and generated-vs-target correlation tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricsRow, Source};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "vectors differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("at least two observations are required"));
    }
    Ok(())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Product-moment correlation. `None` when either vector has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_pair(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Biweight-weighted deviations scaled to unit norm, or `None` when the
/// median absolute deviation is zero.
fn biweight_terms(x: &[f64]) -> Option<Vec<f64>> {
    let med = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&dev);
    if mad == 0.0 {
        return None;
    }
    let mut terms: Vec<f64> = x
        .iter()
        .map(|&v| {
            let u = (v - med) / (9.0 * mad);
            if u.abs() < 1.0 {
                let w = (1.0 - u * u).powi(2);
                (v - med) * w
            } else {
                0.0
            }
        })
        .collect();
    let norm = terms.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    terms.iter_mut().for_each(|t| *t /= norm);
    Some(terms)
}

/// Biweight midcorrelation. Falls back to Pearson when either vector has a
/// zero median absolute deviation; `None` when variance is zero too.
pub fn bicor(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_pair(x, y)?;
    match (biweight_terms(x), biweight_terms(y)) {
        (Some(a), Some(b)) => {
            let s: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            Ok(Some(s.clamp(-1.0, 1.0)))
        }
        _ => pearson(x, y),
    }
}

/// One (model, design, k, metric) cell of a correlation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub model_name: String,
    pub split_design: String,
    pub k: usize,
    pub metric: String,
    /// Mean over replicates with a defined correlation.
    pub bicor_mean: Option<f64>,
    /// Sample standard deviation over those replicates.
    pub bicor_sd: Option<f64>,
    /// Replicates that produced a defined correlation.
    pub n_replicates: usize,
    /// Fewest complete pairs used by any replicate.
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    /// (model_name, sample_id) combinations that lacked a partner.
    pub unpaired: Vec<(String, String)>,
}

impl CorrelationReport {
    pub fn warning_count(&self) -> usize {
        self.unpaired.len()
    }

    pub fn get(&self, model: &str, design: &str, k: usize, metric: Metric) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| {
            r.model_name == model && r.split_design == design && r.k == k && r.metric == metric.name()
        })
    }

    pub fn extend(&mut self, other: CorrelationReport) {
        self.rows.extend(other.rows);
        self.unpaired.extend(other.unpaired);
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(REPORT_COLUMNS)?;
        for r in &self.rows {
            w.write_record(r.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<CorrelationRow>, _>>()?;
        Ok(CorrelationReport {
            rows,
            unpaired: Vec::new(),
        })
    }
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "model_name",
    "split_design",
    "k",
    "metric",
    "bicor_mean",
    "bicor_sd",
    "n_replicates",
    "n_pairs",
];

/// Text form of a correlation value in report files; empty for NA.
pub fn fmt_corr(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => String::new(),
    }
}

impl CorrelationRow {
    /// Fields in [`REPORT_COLUMNS`] order.
    pub fn fields(&self) -> [String; 8] {
        [
            self.model_name.clone(),
            self.split_design.clone(),
            self.k.to_string(),
            self.metric.clone(),
            fmt_corr(self.bicor_mean),
            fmt_corr(self.bicor_sd),
            self.n_replicates.to_string(),
            self.n_pairs.to_string(),
        ]
    }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Pairs each generated row with the target row of the same
/// (sample_id, k, replicate), computes bicor per (model, k, metric,
/// replicate) over the complete pairs, and aggregates replicates.
pub fn correlation_table(rows: &[MetricsRow], split_design: &str) -> CorrelationReport {
    type Key<'a> = (&'a str, usize, usize);
    let mut targets: HashMap<Key, &MetricsRow> = HashMap::new();
    for r in rows.iter().filter(|r| r.source == Source::Target) {
        targets.insert((r.sample_id.as_str(), r.k, r.replicate), r);
    }

    // model -> k -> replicate -> pairs, each keyed by sample id for stable order
    let mut grouped: BTreeMap<&str, BTreeMap<usize, BTreeMap<usize, BTreeMap<&str, (&MetricsRow, &MetricsRow)>>>> =
        BTreeMap::new();
    let mut unpaired: BTreeSet<(String, String)> = BTreeSet::new();
    let mut paired_targets: BTreeMap<&str, BTreeSet<Key>> = BTreeMap::new();

    for g in rows.iter().filter(|r| r.source == Source::Generated) {
        let key = (g.sample_id.as_str(), g.k, g.replicate);
        match targets.get(&key) {
            Some(t) => {
                grouped
                    .entry(&g.model_name)
                    .or_default()
                    .entry(g.k)
                    .or_default()
                    .entry(g.replicate)
                    .or_default()
                    .insert(&g.sample_id, (*t, g));
                paired_targets.entry(&g.model_name).or_default().insert(key);
            }
            None => {
                unpaired.insert((g.model_name.clone(), g.sample_id.clone()));
            }
        }
    }
    // Targets a model never produced a twin for, within the (k, replicate)
    // cells that model was evaluated on.
    for (model, by_k) in &grouped {
        let seen = &paired_targets[model];
        for (k, reps) in by_k {
            for rep in reps.keys() {
                for t in targets.values().filter(|t| t.k == *k && t.replicate == *rep) {
                    if !seen.contains(&(t.sample_id.as_str(), t.k, t.replicate)) {
                        unpaired.insert((model.to_string(), t.sample_id.clone()));
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for (model, by_k) in &grouped {
        for (k, reps) in by_k {
            for metric in Metric::ALL {
                let mut values = Vec::new();
                let mut min_pairs = usize::MAX;
                for pairs in reps.values() {
                    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
                        .values()
                        .filter_map(|(t, g)| Some((t.value(metric)?, g.value(metric)?)))
                        .unzip();
                    min_pairs = min_pairs.min(xs.len());
                    if xs.len() >= 2 {
                        if let Ok(Some(b)) = bicor(&ys, &xs) {
                            values.push(b);
                        }
                    }
                }
                let (mean, sd) = mean_sd(&values);
                out.push(CorrelationRow {
                    model_name: model.to_string(),
                    split_design: split_design.to_string(),
                    k: *k,
                    metric: metric.name().to_string(),
                    bicor_mean: mean,
                    bicor_sd: sd,
                    n_replicates: values.len(),
                    n_pairs: if min_pairs == usize::MAX { 0 } else { min_pairs },
                });
            }
        }
    }
    CorrelationReport {
        rows: out,
        unpaired: unpaired.into_iter().collect(),
    }
}
