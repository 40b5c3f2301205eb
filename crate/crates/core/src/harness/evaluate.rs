//! Generated-vs-target evaluation: segment both members of every pair with
//! a K-means model fitted on target pixels, compute metrics, correlate.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_all, MetricConfig, MetricsRow, Source};
use crate::raster::RasterStack;
use crate::rng::SplitMix64;
use crate::segmentation::{fit_kmeans, sample_pixels, KMeansModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::stats::{correlation_table, CorrelationReport};

use super::models::read_raster_dir;

/// Share of target images drawn for each K-means fit.
pub const IMAGE_FRACTION: f64 = 0.08;
/// Share of the drawn images' pixels used for each fit.
pub const PIXEL_FRACTION: f64 = 0.03;
/// Lower bound on pixels per fit, per cluster.
pub const MIN_PIXELS_PER_CLUSTER: usize = 50;

pub const TARGET_MODEL_NAME: &str = "target";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k_list: Vec<usize>,
    pub replicates: usize,
    /// Images drawn per fit; defaults to 8% of the targets.
    pub images_per_fit: Option<usize>,
    /// Pixels drawn per fit; defaults to 3% of the drawn images' pixels,
    /// but at least 50 per cluster.
    pub pixels_per_fit: Option<usize>,
    /// Pairs evaluated per replicate; all pairs when unset.
    pub pairs_per_replicate: Option<usize>,
    pub seed: u64,
    pub metric: MetricConfig,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_list: vec![8, 20, 60],
            replicates: 8,
            images_per_fit: None,
            pixels_per_fit: None,
            pairs_per_replicate: None,
            seed: 0,
            metric: MetricConfig::default(),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

impl EvalConfig {
    /// (images, pixels) drawn for a fit with `k` clusters over `targets`.
    pub fn fit_budget(&self, targets: &[&RasterStack], k: usize) -> (usize, usize) {
        let t = targets.len();
        let images = self
            .images_per_fit
            .unwrap_or_else(|| ((IMAGE_FRACTION * t as f64).ceil() as usize).max(1))
            .min(t);
        let per_image = targets.first().map_or(0, |r| r.pixel_count());
        let pool = images * per_image;
        let pixels = self.pixels_per_fit.unwrap_or_else(|| {
            ((PIXEL_FRACTION * pool as f64).ceil() as usize)
                .max(MIN_PIXELS_PER_CLUSTER * k)
                .min(pool)
        });
        (images, pixels)
    }
}

/// Generated imagery of one model, aligned with the target list.
pub struct GeneratedSet {
    pub model_name: String,
    pub images: Vec<Option<RasterStack>>,
}

/// Metric rows plus the correlation report built from them.
pub struct Evaluation {
    pub rows: Vec<MetricsRow>,
    pub report: CorrelationReport,
    pub kmeans: Vec<KMeansModel>,
}

/// Evaluates each generated set against `targets` (id, imagery).
pub fn evaluate(
    targets: &[(String, RasterStack)],
    generated: &[GeneratedSet],
    cfg: &EvalConfig,
    split_design: &str,
) -> Result<Evaluation> {
    if targets.is_empty() {
        return Err(Error::invalid("no target images to evaluate against"));
    }
    if cfg.replicates == 0 || cfg.k_list.is_empty() {
        return Err(Error::invalid("need at least one replicate and one k"));
    }
    for g in generated {
        if g.images.len() != targets.len() {
            return Err(Error::invalid(format!(
                "model {} has {} outputs for {} targets",
                g.model_name,
                g.images.len(),
                targets.len()
            )));
        }
        if g.images.iter().all(Option::is_none) {
            return Err(Error::invalid(format!(
                "model {} produced no image for any target",
                g.model_name
            )));
        }
        for img in g.images.iter().flatten() {
            img.require_imagery()?;
        }
    }
    let target_refs: Vec<&RasterStack> = targets.iter().map(|(_, r)| r).collect();
    for r in &target_refs {
        r.require_imagery()?;
    }

    let mut rows = Vec::new();
    let mut models = Vec::new();
    for &k in &cfg.k_list {
        let (n_images, n_pixels) = cfg.fit_budget(&target_refs, k);
        for rep in 0..cfg.replicates {
            let seed = cfg.seed.wrapping_add(rep as u64);
            let pixels = sample_pixels(&target_refs, n_pixels, n_images, seed)?;
            let model = fit_kmeans(&pixels, k, seed, cfg.max_iter, cfg.tol)?;

            let subset: Vec<usize> = match cfg.pairs_per_replicate {
                Some(m) if m < targets.len() => {
                    let mut idx = SplitMix64::new(seed ^ 0xA5A5_5A5A).sample_indices(targets.len(), m);
                    idx.sort_unstable();
                    idx
                }
                _ => (0..targets.len()).collect(),
            };

            let target_rows: Vec<MetricsRow> = subset
                .par_iter()
                .map(|&i| {
                    let (id, img) = &targets[i];
                    let m = compute_all(img, &model, &cfg.metric)?;
                    Ok(MetricsRow::new(id, Source::Target, TARGET_MODEL_NAME, k, rep, &m, &cfg.metric))
                })
                .collect::<Result<_>>()?;
            rows.extend(target_rows);

            for g in generated {
                let gen_rows: Vec<Option<MetricsRow>> = subset
                    .par_iter()
                    .map(|&i| {
                        let Some(img) = &g.images[i] else {
                            return Ok(None);
                        };
                        let m = compute_all(img, &model, &cfg.metric)?;
                        Ok(Some(MetricsRow::new(
                            &targets[i].0,
                            Source::Generated,
                            &g.model_name,
                            k,
                            rep,
                            &m,
                            &cfg.metric,
                        )))
                    })
                    .collect::<Result<_>>()?;
                rows.extend(gen_rows.into_iter().flatten());
            }
            models.push(model);
        }
    }
    let report = correlation_table(&rows, split_design);
    if report.warning_count() > 0 {
        log::warn!(
            "{} generated/target pairs were incomplete and excluded",
            report.warning_count()
        );
    }
    Ok(Evaluation {
        rows,
        report,
        kmeans: models,
    })
}

/// Evaluates a directory of generated `<id>.lscp` files against a directory
/// of targets with the same naming.
pub fn evaluate_pair_dir(
    target_dir: impl AsRef<Path>,
    generated_dir: impl AsRef<Path>,
    model_name: &str,
    cfg: &EvalConfig,
    split_design: &str,
) -> Result<Evaluation> {
    let targets: Vec<(String, RasterStack)> = read_raster_dir(target_dir)?.into_iter().collect();
    let mut generated = read_raster_dir(generated_dir)?;
    let images = targets.iter().map(|(id, _)| generated.remove(id)).collect();
    if !generated.is_empty() {
        log::warn!("{} generated images have no target and were ignored", generated.len());
    }
    evaluate(
        &targets,
        &[GeneratedSet {
            model_name: model_name.to_string(),
            images,
        }],
        cfg,
        split_design,
    )
}
