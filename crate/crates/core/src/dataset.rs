//! On-disk dataset layout: `dataset.json`, `manifest.jsonl` and one pair of
//! `.lscp` files per sample. Paths in the manifest are relative to it.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{RasterStack, Sample};

pub const DATASET_FILE: &str = "dataset.json";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub seed: u64,
    pub cell_size_m: f32,
    pub predictor_names: Vec<String>,
    pub generator_version: String,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub region: String,
    pub conditions_path: String,
    pub imagery_path: String,
}

/// Catalog of all samples in a dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub info: DatasetInfo,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let root = dir.as_ref().to_path_buf();
        let info: DatasetInfo =
            serde_json::from_reader(BufReader::new(File::open(root.join(DATASET_FILE))?))?;
        let mut entries = Vec::new();
        for line in BufReader::new(File::open(root.join(MANIFEST_FILE))?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str::<ManifestEntry>(&line)?);
        }
        if entries.len() != info.n_samples {
            return Err(Error::Format(format!(
                "dataset.json declares {} samples, manifest lists {}",
                info.n_samples,
                entries.len()
            )));
        }
        Ok(DatasetManifest {
            root,
            info,
            entries,
        })
    }

    /// Writes `dataset.json` and `manifest.jsonl` under `root`.
    pub fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        let mut f = BufWriter::new(File::create(self.root.join(DATASET_FILE))?);
        serde_json::to_writer_pretty(&mut f, &self.info)?;
        writeln!(f)?;
        f.flush()?;
        let mut m = BufWriter::new(File::create(self.root.join(MANIFEST_FILE))?);
        for e in &self.entries {
            serde_json::to_writer(&mut m, e)?;
            writeln!(m)?;
        }
        m.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn load_sample(&self, entry: &ManifestEntry) -> Result<Sample> {
        let conditions = RasterStack::read_file(self.root.join(&entry.conditions_path))?;
        let imagery = RasterStack::read_file(self.root.join(&entry.imagery_path))?;
        Sample::new(
            entry.id.clone(),
            entry.lat,
            entry.lon,
            entry.region.clone(),
            conditions,
            imagery,
        )
    }

    /// Loads every sample, in manifest order.
    pub fn load_all(&self) -> Result<Vec<Sample>> {
        self.entries
            .par_iter()
            .map(|e| self.load_sample(e))
            .collect()
    }
}

/// Geolocation-only view of a manifest, enough for splitting.
pub trait Located {
    fn id(&self) -> &str;
    fn lat(&self) -> f64;
    fn lon(&self) -> f64;
    fn region(&self) -> &str;
}

impl Located for ManifestEntry {
    fn id(&self) -> &str {
        &self.id
    }
    fn lat(&self) -> f64 {
        self.lat
    }
    fn lon(&self) -> f64 {
        self.lon
    }
    fn region(&self) -> &str {
        &self.region
    }
}

impl Located for Sample {
    fn id(&self) -> &str {
        &self.id
    }
    fn lat(&self) -> f64 {
        self.lat
    }
    fn lon(&self) -> f64 {
        self.lon
    }
    fn region(&self) -> &str {
        &self.region
    }
}
