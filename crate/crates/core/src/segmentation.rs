//! K-means segmentation of 4-band imagery into land-cover units.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterStack;
use crate::rng::SplitMix64;

/// One pixel in band space (blue, green, red, nir).
pub type Pixel = [f64; 4];

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Pixels per parallel work unit. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub seed: u64,
    pub iterations_run: usize,
    pub inertia: f64,
    pub centroids: Vec<Pixel>,
    /// Inertia after each assignment step, ending with the final centroids.
    #[serde(default, skip_serializing)]
    pub inertia_history: Vec<f64>,
}

/// Per-pixel cluster labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRaster {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl ClassRaster {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid(format!(
                "{} labels for a {width}x{height} class raster",
                labels.len()
            )));
        }
        Ok(ClassRaster {
            width,
            height,
            labels,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Single-channel raster with labels stored as reals.
    pub fn to_raster(&self, cell_size_m: f32) -> RasterStack {
        RasterStack::from_parts_unchecked(
            self.width,
            self.height,
            vec!["class".into()],
            cell_size_m,
            self.labels.iter().map(|&l| l as f32).collect(),
        )
    }

    pub fn from_raster(r: &RasterStack) -> Result<Self> {
        if r.channels() != 1 {
            return Err(Error::invalid("class raster must have one channel"));
        }
        let labels = r
            .values()
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f32 {
                    Ok(v as u32)
                } else {
                    Err(Error::invalid(format!("label {v} is not a nonnegative integer")))
                }
            })
            .collect::<Result<_>>()?;
        ClassRaster::new(r.width(), r.height(), labels)
    }
}

#[inline]
fn dist2(a: &Pixel, b: &Pixel) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Index of the nearest centroid; ties go to the lowest index.
#[inline]
pub fn nearest(centroids: &[Pixel], p: &Pixel) -> (usize, f64) {
    let mut best = (0, dist2(&centroids[0], p));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(c, p);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn imagery_pixels(img: &RasterStack) -> Result<Vec<Pixel>> {
    img.require_imagery()?;
    let n = img.pixel_count();
    let v = img.values();
    Ok((0..n)
        .map(|i| [v[i] as f64, v[n + i] as f64, v[2 * n + i] as f64, v[3 * n + i] as f64])
        .collect())
}

/// Draws `n_images` images uniformly without replacement, then `n_pixels`
/// pixels uniformly without replacement from their pooled pixels.
pub fn sample_pixels(
    images: &[&RasterStack],
    n_pixels: usize,
    n_images: usize,
    seed: u64,
) -> Result<Vec<Pixel>> {
    if n_images == 0 || n_images > images.len() {
        return Err(Error::invalid(format!(
            "cannot draw {n_images} images from {} available",
            images.len()
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let chosen = rng.sample_indices(images.len(), n_images);
    let mut offsets = Vec::with_capacity(n_images + 1);
    offsets.push(0usize);
    for &i in &chosen {
        images[i].require_imagery()?;
        offsets.push(offsets.last().unwrap() + images[i].pixel_count());
    }
    let total = *offsets.last().unwrap();
    if n_pixels > total {
        return Err(Error::invalid(format!(
            "{n_pixels} pixels requested but the selected images hold {total}"
        )));
    }
    let picks = rng.sample_indices(total, n_pixels);
    Ok(picks
        .into_iter()
        .map(|g| {
            let slot = offsets.partition_point(|&o| o <= g) - 1;
            let img = images[chosen[slot]];
            let p = g - offsets[slot];
            let n = img.pixel_count();
            let v = img.values();
            [v[p] as f64, v[n + p] as f64, v[2 * n + p] as f64, v[3 * n + p] as f64]
        })
        .collect())
}

/// Labels and total squared distance for the given centroids.
fn assign_all(pixels: &[Pixel], centroids: &[Pixel]) -> (Vec<u32>, f64) {
    let parts: Vec<(Vec<u32>, f64)> = pixels
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut labels = Vec::with_capacity(chunk.len());
            let mut s = 0.0;
            for p in chunk {
                let (j, d) = nearest(centroids, p);
                labels.push(j as u32);
                s += d;
            }
            (labels, s)
        })
        .collect();
    let mut labels = Vec::with_capacity(pixels.len());
    let mut inertia = 0.0;
    for (l, s) in parts {
        labels.extend(l);
        inertia += s;
    }
    (labels, inertia)
}

fn cluster_means(pixels: &[Pixel], labels: &[u32], k: usize) -> (Vec<Pixel>, Vec<usize>) {
    let parts: Vec<(Vec<Pixel>, Vec<usize>)> = pixels
        .par_chunks(CHUNK)
        .zip(labels.par_chunks(CHUNK))
        .map(|(ps, ls)| {
            let mut sums = vec![[0.0; 4]; k];
            let mut counts = vec![0usize; k];
            for (p, &l) in ps.iter().zip(ls) {
                let s = &mut sums[l as usize];
                for b in 0..4 {
                    s[b] += p[b];
                }
                counts[l as usize] += 1;
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![[0.0; 4]; k];
    let mut counts = vec![0usize; k];
    for (s, c) in parts {
        for j in 0..k {
            for b in 0..4 {
                sums[j][b] += s[j][b];
            }
            counts[j] += c[j];
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            for b in 0..4 {
                sums[j][b] /= counts[j] as f64;
            }
        }
    }
    (sums, counts)
}

fn kmeans_pp(pixels: &[Pixel], k: usize, rng: &mut SplitMix64) -> Vec<Pixel> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(pixels[rng.below(pixels.len())]);
    let mut d2: Vec<f64> = pixels.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = pixels.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            // rounding can leave `pick` on an already chosen point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.below(pixels.len())
        };
        let c = pixels[next];
        for (p, d) in pixels.iter().zip(d2.iter_mut()) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn distinct_count(pixels: &[Pixel], cap: usize) -> usize {
    let mut seen = HashSet::new();
    for p in pixels {
        seen.insert(p.map(f64::to_bits));
        if seen.len() >= cap {
            break;
        }
    }
    seen.len()
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn fit_kmeans(pixels: &[Pixel], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansModel> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if pixels.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("pixels contain non-finite values"));
    }
    let distinct = distinct_count(pixels, k);
    if distinct < k {
        return Err(Error::invalid(format!(
            "only {distinct} distinct pixels for k = {k}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut centroids = kmeans_pp(pixels, k, &mut rng);
    let mut history = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..max_iter {
        let (labels, inertia) = assign_all(pixels, &centroids);
        history.push(inertia);
        let (mut next, counts) = cluster_means(pixels, &labels, k);

        let empties: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        if !empties.is_empty() {
            // Re-seed each empty cluster at the pixel farthest from its own centroid.
            let mut far: Vec<(f64, usize)> = pixels
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (p, &l))| (dist2(p, &next[l as usize]), i))
                .collect();
            far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (slot, j) in empties.into_iter().enumerate() {
                next[j] = pixels[far[slot].1];
            }
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations_run += 1;
        if shift < tol {
            break;
        }
    }
    let (_, inertia) = assign_all(pixels, &centroids);
    history.push(inertia);
    Ok(KMeansModel {
        k,
        seed,
        iterations_run,
        inertia,
        centroids,
        inertia_history: history,
    })
}

impl KMeansModel {
    /// Nearest-centroid labeling of every pixel.
    pub fn assign(&self, imagery: &RasterStack) -> Result<ClassRaster> {
        assign(self, imagery)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let m: KMeansModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if m.k == 0 || m.centroids.len() != m.k {
            return Err(Error::Format(format!(
                "kmeans model declares k = {} with {} centroids",
                m.k,
                m.centroids.len()
            )));
        }
        Ok(m)
    }
}

pub fn assign(model: &KMeansModel, imagery: &RasterStack) -> Result<ClassRaster> {
    if imagery.channels() != 4 {
        return Err(Error::invalid(format!(
            "expected 4 bands, imagery has {}",
            imagery.channels()
        )));
    }
    let n = imagery.pixel_count();
    let v = imagery.values();
    let labels = (0..n)
        .map(|i| {
            let p = [v[i] as f64, v[n + i] as f64, v[2 * n + i] as f64, v[3 * n + i] as f64];
            nearest(&model.centroids, &p).0 as u32
        })
        .collect();
    ClassRaster::new(imagery.width(), imagery.height(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::IMAGERY_BANDS;

    fn image_from(pixels: &[Pixel], w: usize, h: usize) -> RasterStack {
        let bands = (0..4)
            .map(|b| pixels.iter().map(|p| p[b] as f32).collect())
            .collect();
        RasterStack::from_bands(w, h, &IMAGERY_BANDS, 43.0, bands).unwrap()
    }

    fn model(centroids: Vec<Pixel>) -> KMeansModel {
        KMeansModel {
            k: centroids.len(),
            seed: 0,
            iterations_run: 0,
            inertia: 0.0,
            centroids,
            inertia_history: vec![],
        }
    }

    #[test]
    fn identical_pixels_single_cluster() {
        let px = vec![[0.2, 0.3, 0.4, 0.5]; 50];
        let m = fit_kmeans(&px, 1, 3, 100, 1e-6).unwrap();
        for (c, e) in m.centroids[0].iter().zip([0.2, 0.3, 0.4, 0.5]) {
            assert!((c - e).abs() < 1e-15);
        }
        assert!(m.inertia < 1e-28);
    }

    #[test]
    fn two_blobs() {
        let mut rng = SplitMix64::new(17);
        let mut px = Vec::new();
        for i in 0..400 {
            let c = if i % 2 == 0 { 0.0 } else { 10.0 };
            px.push([0; 4].map(|_| c + rng.uniform(-0.1, 0.1)));
        }
        let m = fit_kmeans(&px, 2, 5, 100, 1e-6).unwrap();
        let mut cs = m.centroids.clone();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for b in 0..4 {
            assert!(cs[0][b].abs() < 0.1);
            assert!((cs[1][b] - 10.0).abs() < 0.1);
        }
    }

    #[test]
    fn too_few_distinct_pixels() {
        let px = vec![[0.0; 4], [1.0; 4], [2.0; 4], [0.0; 4], [1.0; 4]];
        assert!(fit_kmeans(&px, 5, 1, 10, 1e-6).is_err());
        assert!(fit_kmeans(&px, 3, 1, 10, 1e-6).is_ok());
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = SplitMix64::new(99);
        let px: Vec<Pixel> = (0..3000).map(|_| [0; 4].map(|_| rng.next_f64())).collect();
        let m = fit_kmeans(&px, 12, 4, 50, 0.0).unwrap();
        for w in m.inertia_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        assert_eq!(m.inertia, *m.inertia_history.last().unwrap());
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = SplitMix64::new(1);
        let px: Vec<Pixel> = (0..10_000).map(|_| [0; 4].map(|_| rng.next_f64())).collect();
        let a = fit_kmeans(&px, 8, 2, 30, 1e-6).unwrap();
        let b = fit_kmeans(&px, 8, 2, 30, 1e-6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assign_to_exact_centroid_and_ties() {
        let m = model(vec![[0.0; 4], [0.25; 4], [1.0; 4], [0.75; 4]]);
        let img = image_from(&[[0.25; 4]; 6], 3, 2);
        let cr = assign(&m, &img).unwrap();
        assert!(cr.labels.iter().all(|&l| l == 1));
        assert_eq!(cr, assign(&m, &img).unwrap());

        // 0.5 is equidistant from centroids 1 (0.25) and 3 (0.75)
        let img = image_from(&[[0.5; 4]], 1, 1);
        assert_eq!(assign(&m, &img).unwrap().labels, vec![1]);
    }

    #[test]
    fn assign_rejects_wrong_band_count() {
        let m = model(vec![[0.0; 4]]);
        let img = RasterStack::zeros(2, 2, &["a", "b", "c"], 43.0);
        assert!(assign(&m, &img).is_err());
    }

    #[test]
    fn sample_pixels_draws_real_pixels() {
        let px: Vec<Pixel> = (0..64 * 64).map(|i| [i as f64 / 4096.0, 0.1, 0.2, 0.3]).collect();
        let img = image_from(&px, 64, 64);
        let s = sample_pixels(&[&img], 10, 1, 4).unwrap();
        assert_eq!(s.len(), 10);
        for p in &s {
            assert!(px.iter().any(|q| q.map(|v| v as f32) == p.map(|v| v as f32)));
        }
        assert_eq!(s, sample_pixels(&[&img], 10, 1, 4).unwrap());
        assert!(sample_pixels(&[&img], 10, 2, 4).is_err());
        assert!(sample_pixels(&[&img], 5000, 1, 4).is_err());
    }

    #[test]
    fn model_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = model(vec![[0.1, 0.2, 0.3, 0.4], [0.5; 4]]);
        let path = dir.path().join("kmeans.json");
        m.write_file(&path).unwrap();
        let v: serde_json::Value = serde_json::from_reader(File::open(&path).unwrap()).unwrap();
        for key in ["k", "seed", "iterations_run", "inertia", "centroids"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(KMeansModel::read_file(&path).unwrap(), m);
    }

    #[test]
    fn class_raster_lscp_roundtrip() {
        let cr = ClassRaster::new(2, 2, vec![0, 3, 1, 2]).unwrap();
        let r = cr.to_raster(43.0);
        let mut buf = Vec::new();
        r.write_to(&mut buf).unwrap();
        let back = RasterStack::read_from(&buf[..]).unwrap();
        assert_eq!(ClassRaster::from_raster(&back).unwrap(), cr);
    }
}
