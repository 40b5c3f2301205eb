//! Counterfactual climate sweeps: shift temperature and precipitation of one
//! sample over a grid, regenerate imagery and lay the results out as a mosaic.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::metrics::ndvi_mean;
use crate::raster::{RasterStack, BLUE, GREEN, RED};
use crate::stats::fmt_corr;
use crate::synth::{PRECIPITATION, TEMPERATURE};

use super::models::Generator;

/// Pixels between mosaic cells and around the border.
pub const GUTTER: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub temperature_channel: String,
    pub precipitation_channel: String,
    /// Column offsets.
    pub d_temp: Vec<f64>,
    /// Row offsets.
    pub d_precip: Vec<f64>,
}

impl SweepConfig {
    pub fn new(d_temp: Vec<f64>, d_precip: Vec<f64>) -> Self {
        SweepConfig {
            temperature_channel: TEMPERATURE.into(),
            precipitation_channel: PRECIPITATION.into(),
            d_temp,
            d_precip,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub row: usize,
    pub col: usize,
    pub d_temp: f64,
    pub d_precip: f64,
    pub ndvi_mean: Option<f64>,
    pub original: bool,
}

pub struct SweepResult {
    pub sample_id: String,
    pub cells: Vec<SweepCell>,
    /// Generated imagery per cell, row-major.
    pub images: Vec<RasterStack>,
    pub mosaic: RgbImage,
}

/// Generates imagery for every (Δt, Δp) combination. Columns follow
/// `d_temp`, rows follow `d_precip`; the unshifted cell, if on the grid, is
/// outlined in red.
pub fn counterfactual_sweep(
    generator: &dyn Generator,
    sample_id: &str,
    conditions: &RasterStack,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    if cfg.d_temp.is_empty() || cfg.d_precip.is_empty() {
        return Err(Error::invalid("sweep grids must not be empty"));
    }
    for name in [&cfg.temperature_channel, &cfg.precipitation_channel] {
        if conditions.channel_index(name).is_none() {
            return Err(Error::invalid(format!("conditions have no channel {name:?}")));
        }
    }
    let mut cells = Vec::new();
    let mut inputs = Vec::new();
    for (row, &dp) in cfg.d_precip.iter().enumerate() {
        for (col, &dt) in cfg.d_temp.iter().enumerate() {
            let shifted = conditions
                .with_channel_offset(&cfg.temperature_channel, dt as f32)?
                .with_channel_offset(&cfg.precipitation_channel, dp as f32)?;
            inputs.push((format!("{sample_id}_r{row}_c{col}"), shifted));
            cells.push(SweepCell {
                row,
                col,
                d_temp: dt,
                d_precip: dp,
                ndvi_mean: None,
                original: dt == 0.0 && dp == 0.0,
            });
        }
    }
    let images = generator.generate(&inputs)?;
    if images.len() != inputs.len() {
        return Err(Error::External(format!(
            "generator {} returned {} images for {} inputs",
            generator.name(),
            images.len(),
            inputs.len()
        )));
    }
    for (cell, img) in cells.iter_mut().zip(&images) {
        img.require_imagery()?;
        cell.ndvi_mean = ndvi_mean(img);
    }
    let mosaic = compose_mosaic(&images, &cells, cfg.d_temp.len(), cfg.d_precip.len())?;
    Ok(SweepResult {
        sample_id: sample_id.to_string(),
        cells,
        images,
        mosaic,
    })
}

/// 8-bit RGB rendering with a 2nd-98th percentile stretch over the three
/// visible bands of this image.
pub fn render_rgb(img: &RasterStack) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let mut all: Vec<f32> = [RED, GREEN, BLUE].iter().flat_map(|&b| img.band(b).iter().copied()).collect();
    all.sort_by(f32::total_cmp);
    let pick = |q: f64| all[((all.len() - 1) as f64 * q).round() as usize];
    let (lo, hi) = (pick(0.02), pick(0.98));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let to8 = |v: f32| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out.put_pixel(
                x as u32,
                y as u32,
                Rgb([to8(img.band(RED)[i]), to8(img.band(GREEN)[i]), to8(img.band(BLUE)[i])]),
            );
        }
    }
    out
}

/// Top-left pixel of grid cell (row, col) for cells of size w×h.
pub fn cell_origin(row: usize, col: usize, w: u32, h: u32) -> (u32, u32) {
    (GUTTER + col as u32 * (w + GUTTER), GUTTER + row as u32 * (h + GUTTER))
}

fn compose_mosaic(images: &[RasterStack], cells: &[SweepCell], cols: usize, rows: usize) -> Result<RgbImage> {
    let (w, h) = (images[0].width() as u32, images[0].height() as u32);
    if images.iter().any(|i| i.width() as u32 != w || i.height() as u32 != h) {
        return Err(Error::invalid("sweep images differ in size"));
    }
    let total_w = cols as u32 * w + (cols as u32 + 1) * GUTTER;
    let total_h = rows as u32 * h + (rows as u32 + 1) * GUTTER;
    let mut m = RgbImage::from_pixel(total_w, total_h, Rgb([255, 255, 255]));
    for (cell, img) in cells.iter().zip(images) {
        let (x0, y0) = cell_origin(cell.row, cell.col, w, h);
        image::imageops::replace(&mut m, &render_rgb(img), x0 as i64, y0 as i64);
        if cell.original {
            let red = Rgb([220, 0, 0]);
            let (l, t) = (x0 - 2, y0 - 2);
            let (r, b) = (x0 + w + 1, y0 + h + 1);
            for x in l..=r {
                for y in [t, t + 1, b - 1, b] {
                    m.put_pixel(x, y, red);
                }
            }
            for y in t..=b {
                for x in [l, l + 1, r - 1, r] {
                    m.put_pixel(x, y, red);
                }
            }
        }
    }
    Ok(m)
}

impl SweepResult {
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.mosaic.save(path)?;
        Ok(())
    }

    /// One line per cell with its grid position, offsets, NDVI and the
    /// pixel origin of the cell inside the mosaic.
    pub fn write_table(&self, path: impl AsRef<Path>) -> Result<()> {
        let (w, h) = (self.images[0].width() as u32, self.images[0].height() as u32);
        let mut wr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        wr.write_record(["sample_id", "row", "col", "d_temp", "d_precip", "ndvi_mean", "original", "x0", "y0"])?;
        for c in &self.cells {
            let (x0, y0) = cell_origin(c.row, c.col, w, h);
            wr.write_record([
                self.sample_id.clone(),
                c.row.to_string(),
                c.col.to_string(),
                c.d_temp.to_string(),
                c.d_precip.to_string(),
                fmt_corr(c.ndvi_mean),
                c.original.to_string(),
                x0.to_string(),
                y0.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::IMAGERY_BANDS;

    /// Imagery whose NDVI rises with precipitation.
    struct Toy;

    impl Generator for Toy {
        fn name(&self) -> &str {
            "toy"
        }

        fn generate(&self, c: &[(String, RasterStack)]) -> Result<Vec<RasterStack>> {
            Ok(c.iter()
                .map(|(_, s)| {
                    let p = s.band_by_name(PRECIPITATION).unwrap();
                    let n = p.len();
                    let nir: Vec<f32> = p.iter().map(|v| (0.3 + 0.3 * v).clamp(0.0, 1.0)).collect();
                    let bands = vec![vec![0.05; n], vec![0.08; n], vec![0.1; n], nir];
                    RasterStack::from_bands(s.width(), s.height(), &IMAGERY_BANDS, 43.0, bands).unwrap()
                })
                .collect())
        }
    }

    fn conditions() -> RasterStack {
        let n = 6 * 5;
        let t: Vec<f32> = (0..n).map(|i| i as f32 / n as f32).collect();
        let p: Vec<f32> = (0..n).map(|i| 0.5 - i as f32 / (2 * n) as f32).collect();
        RasterStack::from_bands(6, 5, &[TEMPERATURE, PRECIPITATION], 43.0, vec![t, p]).unwrap()
    }

    #[test]
    fn zero_grid_equals_plain_prediction() {
        let c = conditions();
        let res = counterfactual_sweep(&Toy, "s", &c, &SweepConfig::new(vec![0.0], vec![0.0])).unwrap();
        let plain = Toy.generate(&[("s".into(), c)]).unwrap().remove(0);
        assert_eq!(res.images[0], plain);
        assert!(res.cells[0].original);
        let (x0, y0) = cell_origin(0, 0, 6, 5);
        let rgb = render_rgb(&plain);
        for y in 0..5 {
            for x in 0..6 {
                assert_eq!(res.mosaic.get_pixel(x0 + x, y0 + y), rgb.get_pixel(x, y));
            }
        }
    }

    #[test]
    fn three_by_three_mosaic_dimensions() {
        let g = vec![-0.1, 0.0, 0.1];
        let res = counterfactual_sweep(&Toy, "s", &conditions(), &SweepConfig::new(g.clone(), g)).unwrap();
        assert_eq!(res.mosaic.width(), 3 * 6 + 4 * GUTTER);
        assert_eq!(res.mosaic.height(), 3 * 5 + 4 * GUTTER);
        assert_eq!(res.cells.iter().filter(|c| c.original).count(), 1);
        assert_eq!(res.mosaic.get_pixel(GUTTER + 6 + GUTTER - 2, GUTTER + 5 + GUTTER - 2), &Rgb([220, 0, 0]));
    }

    #[test]
    fn ndvi_rises_along_precipitation_rows() {
        let cfg = SweepConfig::new(vec![0.0], vec![-0.2, 0.0, 0.2, 0.4]);
        let res = counterfactual_sweep(&Toy, "s", &conditions(), &cfg).unwrap();
        let v: Vec<f64> = res.cells.iter().map(|c| c.ndvi_mean.unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
    }

    #[test]
    fn missing_channel_is_an_error() {
        let c = RasterStack::zeros(2, 2, &["elevation"], 43.0);
        assert!(counterfactual_sweep(&Toy, "s", &c, &SweepConfig::new(vec![0.0], vec![0.0])).is_err());
    }
}
