//! Deterministic synthetic world: environmental conditions and the 4-band
//! imagery they induce, with a known ground-truth mapping.
//!
//! Every sample is a pure function of `(seed, sample_index)`. Imagery also
//! depends on a latent noise field, so conditions do not fully determine a
//! landscape unless `latent_noise_weight` is zero.

pub mod noise;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetInfo, DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::raster::{RasterStack, Sample, DEFAULT_CELL_SIZE_M, IMAGERY_BANDS};
use crate::rng::{hash_words, unit_f64, SplitMix64};

use noise::{fbm_field, smoothstep};

pub const GENERATOR_VERSION: &str = "synthworld-1";

pub const ELEVATION: &str = "elevation";
pub const TEMPERATURE: &str = "temperature_mean";
pub const PRECIPITATION: &str = "precipitation_annual";
pub const SEASONALITY: &str = "precipitation_seasonality";
pub const LITHO: [&str; 3] = ["litho_a", "litho_b", "litho_c"];
pub const AGRICULTURE: &str = "anthro_agriculture";

pub const DEFAULT_PREDICTORS: [&str; 8] = [
    ELEVATION,
    TEMPERATURE,
    PRECIPITATION,
    SEASONALITY,
    LITHO[0],
    LITHO[1],
    LITHO[2],
    AGRICULTURE,
];

/// Temperature at which greenness peaks (normalized units).
pub const OPTIMAL_TEMPERATURE: f64 = 0.45;
/// Temperature drop per unit of normalized elevation.
pub const LAPSE: f64 = 0.5;
/// Side of an agricultural field, in pixels.
pub const FIELD_SIZE: usize = 8;
/// Side of a crop/fallow tile inside a field.
pub const CROP_TILE: usize = 4;
const FIELD_SLOPE_LIMIT: f64 = 0.012;
const LITHO_SITES: usize = 6;

const TAG_SITE: u64 = 1;
const TAG_LATENT: u64 = 2;
const TAG_FIELD: u64 = 3;
const TAG_CHANNEL: u64 = 4;
const TAG_LITHO: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub width: usize,
    pub height: usize,
    pub predictor_set: Vec<String>,
    pub cell_size_m: f32,
    pub noise_octaves: u32,
    pub sea_level: f64,
    pub latent_noise_weight: f64,
    /// Samples are placed with |lat| below this bound (degrees).
    pub max_abs_lat: f64,
    /// Temperature added to every "west" sample. A nonzero value gives the
    /// world a regional climate offset that a model trained on "east" alone
    /// has never seen.
    pub west_temperature_offset: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 0,
            n_samples: 100,
            width: 64,
            height: 64,
            predictor_set: DEFAULT_PREDICTORS.iter().map(|s| s.to_string()).collect(),
            cell_size_m: DEFAULT_CELL_SIZE_M,
            noise_octaves: 4,
            sea_level: 0.15,
            latent_noise_weight: 0.25,
            max_abs_lat: 60.0,
            west_temperature_offset: 0.0,
        }
    }
}

impl WorldConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("width and height must be positive"));
        }
        if !(0.0..1.0).contains(&self.latent_noise_weight) {
            return Err(Error::invalid("latent_noise_weight must lie in [0, 1)"));
        }
        if !(self.cell_size_m.is_finite() && self.cell_size_m > 0.0) {
            return Err(Error::invalid("cell_size_m must be positive"));
        }
        if !(0.0..=90.0).contains(&self.max_abs_lat) {
            return Err(Error::invalid("max_abs_lat must lie in [0, 90]"));
        }
        for required in [ELEVATION, TEMPERATURE, PRECIPITATION] {
            if !self.predictor_set.iter().any(|p| p == required) {
                return Err(Error::invalid(format!("predictor_set lacks {required}")));
            }
        }
        let litho = LITHO
            .iter()
            .filter(|l| self.predictor_set.iter().any(|p| p == *l))
            .count();
        if litho != 0 && litho != LITHO.len() {
            return Err(Error::invalid("litho channels must be all present or all absent"));
        }
        Ok(())
    }

    fn has(&self, name: &str) -> bool {
        self.predictor_set.iter().any(|p| p == name)
    }
}

/// Region tag from longitude: "west" on [-170, -30], "east" elsewhere.
pub fn region_for_lon(lon: f64) -> &'static str {
    if (-170.0..=-30.0).contains(&lon) {
        "west"
    } else {
        "east"
    }
}

pub fn sample_id(index: usize) -> String {
    format!("s{index:06}")
}

/// Seed of the latent field used for sample `index`.
pub fn latent_seed(cfg: &WorldConfig, index: usize) -> u64 {
    hash_words(&[cfg.seed, index as u64, TAG_LATENT])
}

fn name_tag(name: &str) -> u64 {
    let words: Vec<u64> = name.bytes().map(u64::from).collect();
    hash_words(&words)
}

/// Site placement of sample `index`: (lat, lon, region).
pub fn gen_location(cfg: &WorldConfig, index: usize) -> (f64, f64, &'static str) {
    let mut rng = SplitMix64::new(hash_words(&[cfg.seed, index as u64, TAG_SITE]));
    let lat = rng.uniform(-cfg.max_abs_lat, cfg.max_abs_lat);
    let lon = rng.uniform(-180.0, 180.0);
    (lat, lon, region_for_lon(lon))
}

/// Predictor stack for sample `index`, plus its location.
pub fn gen_conditions(
    cfg: &WorldConfig,
    index: usize,
) -> Result<(f64, f64, String, RasterStack)> {
    cfg.check()?;
    if index >= cfg.n_samples {
        return Err(Error::invalid(format!(
            "sample index {index} out of range for {} samples",
            cfg.n_samples
        )));
    }
    let (w, h) = (cfg.width, cfg.height);
    let n = w * h;
    let (lat, lon, region) = gen_location(cfg, index);

    // Per-sample character; drawn after the location from the same stream.
    let mut rng = SplitMix64::new(hash_words(&[cfg.seed, index as u64, TAG_SITE]));
    rng.next_u64();
    rng.next_u64();
    let elev_bias = rng.uniform(-0.3, 0.25);
    let relief = rng.uniform(0.6, 1.6);
    let precip_bias = rng.uniform(-0.4, 0.4);
    let field_share = rng.uniform(0.0, 0.8);

    let field = |name: &str| {
        fbm_field(
            hash_words(&[cfg.seed, index as u64, TAG_CHANNEL, name_tag(name)]),
            cfg.noise_octaves,
            w,
            h,
        )
    };

    let elevation: Vec<f64> = field(ELEVATION)
        .into_iter()
        .map(|v| (0.5 + (v - 0.5) * 2.0 * relief + elev_bias).clamp(0.0, 1.0))
        .collect();

    let base_temp = 0.9 - 0.6 * (lat.abs() / 60.0);
    let regional = if region == "west" {
        cfg.west_temperature_offset
    } else {
        0.0
    };
    let temperature: Vec<f64> = field(TEMPERATURE)
        .into_iter()
        .zip(&elevation)
        .map(|(v, &e)| base_temp - LAPSE * e + 0.1 * (v - 0.5) + regional)
        .collect();

    let precipitation: Vec<f64> = field(PRECIPITATION)
        .into_iter()
        .map(|v| (0.5 + (v - 0.5) * 2.0 + precip_bias).clamp(0.0, 1.0))
        .collect();

    let litho_class = if cfg.has(LITHO[0]) {
        Some(voronoi_classes(cfg, index, w, h))
    } else {
        None
    };

    let agriculture = if cfg.has(AGRICULTURE) {
        Some(field_mask(cfg, index, &elevation, field_share))
    } else {
        None
    };

    let mut bands = Vec::with_capacity(cfg.predictor_set.len());
    for name in &cfg.predictor_set {
        let plane: Vec<f32> = match name.as_str() {
            ELEVATION => elevation.iter().map(|&v| v as f32).collect(),
            TEMPERATURE => temperature.iter().map(|&v| v as f32).collect(),
            PRECIPITATION => precipitation.iter().map(|&v| v as f32).collect(),
            AGRICULTURE => agriculture.as_ref().unwrap().clone(),
            other => match LITHO.iter().position(|l| *l == other) {
                Some(li) => litho_class
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&c| if c == li { 1.0 } else { 0.0 })
                    .collect(),
                None => field(other).into_iter().map(|v| v as f32).collect(),
            },
        };
        debug_assert_eq!(plane.len(), n);
        bands.push(plane);
    }
    let names: Vec<&str> = cfg.predictor_set.iter().map(String::as_str).collect();
    let stack = RasterStack::from_bands(w, h, &names, cfg.cell_size_m, bands)?;
    Ok((lat, lon, region.to_string(), stack))
}

fn voronoi_classes(cfg: &WorldConfig, index: usize, w: usize, h: usize) -> Vec<usize> {
    let mut rng = SplitMix64::new(hash_words(&[cfg.seed, index as u64, TAG_LITHO]));
    let sites: Vec<(f64, f64, usize)> = (0..LITHO_SITES)
        .map(|_| {
            (
                rng.uniform(0.0, w as f64),
                rng.uniform(0.0, h as f64),
                rng.below(LITHO.len()),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut best = (f64::INFINITY, 0);
            for &(sx, sy, class) in &sites {
                let d = (px - sx).powi(2) + (py - sy).powi(2);
                if d < best.0 {
                    best = (d, class);
                }
            }
            out.push(best.1);
        }
    }
    out
}

/// Rectangular fields switched on with probability `share`, kept only on
/// gentle dry-land slopes.
fn field_mask(cfg: &WorldConfig, index: usize, elevation: &[f64], share: f64) -> Vec<f32> {
    let (w, h) = (cfg.width, cfg.height);
    let at = |x: usize, y: usize| elevation[y * w + x];
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let e = at(x, y);
            if e < cfg.sea_level {
                continue;
            }
            let (fx, fy) = ((x / FIELD_SIZE) as u64, (y / FIELD_SIZE) as u64);
            let on = unit_f64(hash_words(&[cfg.seed, index as u64, TAG_FIELD, fx, fy])) < share;
            if !on {
                continue;
            }
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            if (gx * gx + gy * gy).sqrt() < FIELD_SLOPE_LIMIT {
                out[y * w + x] = 1.0;
            }
        }
    }
    out
}

/// Greenness from climate alone, before latent noise and land use.
pub fn climate_greenness(temperature: f64, precipitation: f64) -> f64 {
    smoothstep(precipitation) * smoothstep(1.0 - (temperature - OPTIMAL_TEMPERATURE).abs() * 2.0)
}

const SOILS: [[f64; 4]; 3] = [
    [0.18, 0.24, 0.30, 0.34],
    [0.11, 0.15, 0.21, 0.25],
    [0.24, 0.30, 0.38, 0.42],
];

/// Land-cover class of a pixel as decided by the imagery oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cover {
    Water,
    Vegetation,
    BareSoil,
    Agriculture,
}

/// Imagery for a conditions stack. Reflectance is a per-pixel function of
/// the conditions blended with a latent field seeded by `latent_seed`.
pub fn gen_imagery(conditions: &RasterStack, cfg: &WorldConfig, latent_seed: u64) -> Result<RasterStack> {
    render(conditions, cfg, latent_seed).map(|(img, _)| img)
}

/// Like [`gen_imagery`], also returning the cover class of each pixel.
pub fn gen_imagery_with_cover(
    conditions: &RasterStack,
    cfg: &WorldConfig,
    latent_seed: u64,
) -> Result<(RasterStack, Vec<Cover>)> {
    render(conditions, cfg, latent_seed)
}

fn render(conditions: &RasterStack, cfg: &WorldConfig, latent_seed: u64) -> Result<(RasterStack, Vec<Cover>)> {
    if conditions.channel_names() != cfg.predictor_set.as_slice() {
        return Err(Error::invalid(format!(
            "conditions channels {:?} do not match predictor set {:?}",
            conditions.channel_names(),
            cfg.predictor_set
        )));
    }
    cfg.check()?;
    let (w, h) = (conditions.width(), conditions.height());
    let n = w * h;
    let band = |name: &str| conditions.band_by_name(name);
    let elevation = band(ELEVATION).unwrap();
    let temperature = band(TEMPERATURE).unwrap();
    let precipitation = band(PRECIPITATION).unwrap();
    let litho: Option<Vec<&[f32]>> = LITHO.iter().map(|l| band(l)).collect();
    let agriculture = band(AGRICULTURE);

    let weight = cfg.latent_noise_weight;
    let latent: Vec<f64> = if weight > 0.0 {
        fbm_field(latent_seed, cfg.noise_octaves, w, h)
            .into_iter()
            .map(|v| (0.5 + (v - 0.5) * 2.5).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; n]
    };

    let mut planes = vec![vec![0.0f32; n]; 4];
    let mut cover = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = (i % w, i / w);
        let e = elevation[i] as f64;
        let refl: [f64; 4];
        if e < cfg.sea_level {
            let depth = ((cfg.sea_level - e) / cfg.sea_level).clamp(0.0, 1.0);
            refl = [
                0.09 - 0.03 * depth,
                0.07 - 0.02 * depth,
                0.05 - 0.02 * depth,
                0.03 - 0.02 * depth,
            ];
            cover.push(Cover::Water);
        } else {
            let mut g = (1.0 - weight) * climate_greenness(temperature[i] as f64, precipitation[i] as f64)
                + weight * latent[i];
            let farmed = agriculture.is_some_and(|a| a[i] > 0.5);
            if farmed {
                let crop = (x / CROP_TILE + y / CROP_TILE) % 2 == 0;
                g = if crop { (g * 1.25 + 0.2).min(1.0) } else { g * 0.35 };
            }
            let soil = match &litho {
                Some(l) => {
                    let k = (0..LITHO.len()).find(|&k| l[k][i] > 0.5).unwrap_or(0);
                    SOILS[k]
                }
                None => SOILS[0],
            };
            let veg = [0.03, 0.08, 0.04, 0.30 + 0.25 * g];
            let f = smoothstep((g - 0.25) / 0.4);
            let mut r = [0.0; 4];
            for b in 0..4 {
                r[b] = (1.0 - f) * soil[b] + f * veg[b];
            }
            refl = r;
            cover.push(if farmed {
                Cover::Agriculture
            } else if f >= 0.5 {
                Cover::Vegetation
            } else {
                Cover::BareSoil
            });
        }
        for b in 0..4 {
            planes[b][i] = refl[b].clamp(0.0, 1.0) as f32;
        }
    }
    let img = RasterStack::from_bands(w, h, &IMAGERY_BANDS, conditions.cell_size_m(), planes)?;
    Ok((img, cover))
}

/// Conditions and imagery for sample `index`.
pub fn gen_sample(cfg: &WorldConfig, index: usize) -> Result<Sample> {
    let (lat, lon, region, conditions) = gen_conditions(cfg, index)?;
    let imagery = gen_imagery(&conditions, cfg, latent_seed(cfg, index))?;
    Sample::new(sample_id(index), lat, lon, region, conditions, imagery)
}

/// All samples in index order, generated in parallel.
pub fn gen_samples(cfg: &WorldConfig) -> Result<Vec<Sample>> {
    cfg.check()?;
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| gen_sample(cfg, i))
        .collect()
}

/// Writes a complete dataset under `out_dir`.
pub fn gen_dataset(cfg: &WorldConfig, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    cfg.check()?;
    let root = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(root.join("conditions"))?;
    fs::create_dir_all(root.join("imagery"))?;
    let entries: Vec<ManifestEntry> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let s = gen_sample(cfg, i)?;
            let conditions_path = format!("conditions/{}.lscp", s.id);
            let imagery_path = format!("imagery/{}.lscp", s.id);
            s.conditions.write_file(root.join(&conditions_path))?;
            s.imagery.write_file(root.join(&imagery_path))?;
            Ok(ManifestEntry {
                id: s.id,
                lat: s.lat,
                lon: s.lon,
                region: s.region,
                conditions_path,
                imagery_path,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = DatasetManifest {
        root,
        info: DatasetInfo {
            seed: cfg.seed,
            cell_size_m: cfg.cell_size_m,
            predictor_names: cfg.predictor_set.clone(),
            generator_version: GENERATOR_VERSION.to_string(),
            n_samples: cfg.n_samples,
        },
        entries,
    };
    manifest.write()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ndvi_mean;

    fn small(seed: u64) -> WorldConfig {
        WorldConfig {
            seed,
            n_samples: 20,
            width: 32,
            height: 32,
            ..Default::default()
        }
    }

    fn pearson(a: &[f32], b: &[f32]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b) {
            let (dx, dy) = (x as f64 - ma, y as f64 - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn conditions_are_deterministic() {
        let cfg = small(3);
        let a = gen_conditions(&cfg, 4).unwrap();
        let b = gen_conditions(&cfg, 4).unwrap();
        assert_eq!(a, b);
        let bits = |r: &RasterStack| r.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.3), bits(&b.3));
    }

    #[test]
    fn index_out_of_range() {
        assert!(gen_conditions(&small(1), 20).is_err());
    }

    #[test]
    fn litho_is_one_hot() {
        let cfg = small(11);
        for i in 0..5 {
            let (_, _, _, c) = gen_conditions(&cfg, i).unwrap();
            let bands: Vec<&[f32]> = LITHO.iter().map(|l| c.band_by_name(l).unwrap()).collect();
            for p in 0..c.pixel_count() {
                let s: f32 = bands.iter().map(|b| b[p]).sum();
                assert_eq!(s, 1.0);
            }
        }
    }

    #[test]
    fn temperature_falls_with_elevation() {
        let cfg = small(5);
        let (_, _, _, c) = gen_conditions(&cfg, 0).unwrap();
        let r = pearson(c.band_by_name(ELEVATION).unwrap(), c.band_by_name(TEMPERATURE).unwrap());
        assert!(r < 0.0, "pearson {r}");
    }

    #[test]
    fn region_follows_longitude() {
        assert_eq!(region_for_lon(-100.0), "west");
        assert_eq!(region_for_lon(-170.0), "west");
        assert_eq!(region_for_lon(-30.0), "west");
        assert_eq!(region_for_lon(-175.0), "east");
        assert_eq!(region_for_lon(10.0), "east");
    }

    #[test]
    fn all_water_world_has_negative_ndvi() {
        let cfg = WorldConfig {
            sea_level: 2.0,
            ..small(2)
        };
        let (_, _, _, c) = gen_conditions(&cfg, 0).unwrap();
        let img = gen_imagery(&c, &cfg, 9).unwrap();
        assert!(ndvi_mean(&img).unwrap() < 0.0);
    }

    #[test]
    fn zero_latent_weight_ignores_latent_seed() {
        let cfg = WorldConfig {
            latent_noise_weight: 0.0,
            ..small(2)
        };
        let (_, _, _, c) = gen_conditions(&cfg, 1).unwrap();
        assert_eq!(gen_imagery(&c, &cfg, 1).unwrap(), gen_imagery(&c, &cfg, 2).unwrap());
        let cfg = small(2);
        assert_ne!(gen_imagery(&c, &cfg, 1).unwrap(), gen_imagery(&c, &cfg, 2).unwrap());
    }

    #[test]
    fn wet_temperate_greener_than_desert() {
        let cfg = small(8);
        let (_, _, _, c) = gen_conditions(&cfg, 0).unwrap();
        let mut wet = c.clone();
        let mut dry = c.clone();
        for (stack, p) in [(&mut wet, 0.9f32), (&mut dry, 0.0)] {
            let e = stack.channel_index(ELEVATION).unwrap();
            stack.band_mut(e).iter_mut().for_each(|v| *v = 0.5);
            let t = stack.channel_index(TEMPERATURE).unwrap();
            stack.band_mut(t).iter_mut().for_each(|v| *v = OPTIMAL_TEMPERATURE as f32);
            let pi = stack.channel_index(PRECIPITATION).unwrap();
            stack.band_mut(pi).iter_mut().for_each(|v| *v = p);
        }
        let nw = ndvi_mean(&gen_imagery(&wet, &cfg, 1).unwrap()).unwrap();
        let nd = ndvi_mean(&gen_imagery(&dry, &cfg, 1).unwrap()).unwrap();
        assert!(nw > nd, "wet {nw} dry {nd}");
    }

    #[test]
    fn water_and_vegetation_spectra() {
        let cfg = small(21);
        let mut seen = std::collections::HashSet::new();
        for i in 0..cfg.n_samples {
            let (_, _, _, c) = gen_conditions(&cfg, i).unwrap();
            let (img, cover) = gen_imagery_with_cover(&c, &cfg, latent_seed(&cfg, i)).unwrap();
            let (red, nir) = (img.band(2), img.band(3));
            for (p, class) in cover.iter().enumerate() {
                match class {
                    Cover::Water => assert!(nir[p] < red[p]),
                    Cover::Vegetation => assert!(nir[p] > red[p]),
                    _ => {}
                }
                seen.insert(*class);
            }
            assert!(img.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(seen.len(), 4, "cover types seen: {seen:?}");
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let cfg = small(1);
        let c = RasterStack::zeros(4, 4, &["elevation"], 43.0);
        assert!(gen_imagery(&c, &cfg, 0).is_err());
    }

    #[test]
    fn extra_predictors_are_noise_fields() {
        let mut cfg = small(4);
        cfg.predictor_set.push("wind_speed".into());
        let (_, _, _, c) = gen_conditions(&cfg, 0).unwrap();
        assert_eq!(c.channels(), 9);
        let wind = c.band_by_name("wind_speed").unwrap();
        assert!(wind.iter().any(|&v| v != wind[0]));
        gen_imagery(&c, &cfg, 0).unwrap();
    }
}
