//! Models the harness can evaluate, and the generator interface used by
//! counterfactual sweeps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::TrainedFc;
use crate::raster::{RasterStack, Sample, IMAGERY_BANDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Per-pixel fully connected baseline, trained per design.
    Fc,
    /// Emits the training-set mean reflectance at every pixel.
    MeanPredictor,
    /// Emits the target itself.
    Identity,
    /// Pre-generated imagery, one `<sample_id>.lscp` per test sample.
    External { name: String, dir: PathBuf },
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        match self {
            ModelSpec::Fc => "fc",
            ModelSpec::MeanPredictor => "mean",
            ModelSpec::Identity => "identity",
            ModelSpec::External { name, .. } => name,
        }
    }

    /// Parses `fc`, `mean`, `identity` or `name=dir`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fc" => Ok(ModelSpec::Fc),
            "mean" | "mean-predictor" => Ok(ModelSpec::MeanPredictor),
            "identity" => Ok(ModelSpec::Identity),
            other => match other.split_once('=') {
                Some((name, dir)) if !name.is_empty() && !dir.is_empty() => Ok(ModelSpec::External {
                    name: name.to_string(),
                    dir: PathBuf::from(dir),
                }),
                _ => Err(Error::invalid(format!(
                    "unknown model {other:?}; use fc, mean, identity or name=dir"
                ))),
            },
        }
    }
}

/// Per-band mean reflectance over every training pixel.
pub fn mean_reflectance(train: &[&Sample]) -> Result<[f64; 4]> {
    if train.is_empty() {
        return Err(Error::invalid("mean predictor needs training samples"));
    }
    let mut sum = [0.0f64; 4];
    let mut n = 0usize;
    for s in train {
        for (b, acc) in sum.iter_mut().enumerate() {
            *acc += s.imagery.band(b).iter().map(|&v| v as f64).sum::<f64>();
        }
        n += s.imagery.pixel_count();
    }
    Ok(sum.map(|v| v / n as f64))
}

/// Uniform imagery with the given reflectance, shaped like `like`.
pub fn constant_imagery(like: &RasterStack, reflectance: [f64; 4]) -> RasterStack {
    let n = like.pixel_count();
    let bands = reflectance.iter().map(|&v| vec![v as f32; n]).collect();
    RasterStack::from_bands(like.width(), like.height(), &IMAGERY_BANDS, like.cell_size_m(), bands)
        .expect("finite reflectance")
}

/// Reads every `*.lscp` file in `dir`, keyed by file stem.
pub fn read_raster_dir(dir: impl AsRef<Path>) -> Result<BTreeMap<String, RasterStack>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("lscp") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        out.insert(stem.to_string(), RasterStack::read_file(&path)?);
    }
    Ok(out)
}

/// Something that turns conditions into imagery.
pub trait Generator {
    fn name(&self) -> &str;

    /// One imagery stack per input, in input order.
    fn generate(&self, conditions: &[(String, RasterStack)]) -> Result<Vec<RasterStack>>;
}

pub struct FcGenerator<'a> {
    pub model: &'a TrainedFc,
}

impl Generator for FcGenerator<'_> {
    fn name(&self) -> &str {
        "fc"
    }

    fn generate(&self, conditions: &[(String, RasterStack)]) -> Result<Vec<RasterStack>> {
        conditions.iter().map(|(_, c)| self.model.predict(c)).collect()
    }
}

/// Out-of-process generator. Conditions are written as `<id>.lscp` into
/// `<work_dir>/in`; the command is run with `{in}` and `{out}` in its
/// arguments replaced by the two directory paths and must leave one
/// `<id>.lscp` per input in `<work_dir>/out`.
pub struct ExternalCommand {
    pub name: String,
    pub program: String,
    pub args: Vec<String>,
    pub work_dir: PathBuf,
}

impl Generator for ExternalCommand {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, conditions: &[(String, RasterStack)]) -> Result<Vec<RasterStack>> {
        let input = self.work_dir.join("in");
        let output = self.work_dir.join("out");
        for d in [&input, &output] {
            if d.exists() {
                fs::remove_dir_all(d)?;
            }
            fs::create_dir_all(d)?;
        }
        for (id, c) in conditions {
            c.write_file(input.join(format!("{id}.lscp")))?;
        }
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| {
                a.replace("{in}", &input.to_string_lossy())
                    .replace("{out}", &output.to_string_lossy())
            })
            .collect();
        let status = Command::new(&self.program).args(&args).status()?;
        if !status.success() {
            return Err(Error::External(format!("{} exited with {status}", self.program)));
        }
        conditions
            .iter()
            .map(|(id, _)| {
                let path = output.join(format!("{id}.lscp"));
                if !path.exists() {
                    return Err(Error::External(format!("generator produced no {}", path.display())));
                }
                let img = RasterStack::read_file(&path)?;
                img.require_imagery()?;
                Ok(img)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(ModelSpec::parse("fc").unwrap(), ModelSpec::Fc);
        assert_eq!(ModelSpec::parse("mean").unwrap(), ModelSpec::MeanPredictor);
        assert_eq!(ModelSpec::parse("identity").unwrap(), ModelSpec::Identity);
        assert_eq!(
            ModelSpec::parse("cgan=runs/gen").unwrap(),
            ModelSpec::External {
                name: "cgan".into(),
                dir: "runs/gen".into()
            }
        );
        assert!(ModelSpec::parse("nope").is_err());
        assert!(ModelSpec::parse("=x").is_err());
    }

    #[test]
    fn raster_dir_keys_by_stem() {
        let dir = tempfile::tempdir().unwrap();
        let r = RasterStack::zeros(2, 2, &IMAGERY_BANDS, 43.0);
        r.write_file(dir.path().join("s000001.lscp")).unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let m = read_raster_dir(dir.path()).unwrap();
        assert_eq!(m.keys().collect::<Vec<_>>(), vec!["s000001"]);
    }
}
