//! Landscape-level patch metrics (SHDI, COHESION, CONNECT, FRAC_MN, MESH)
//! and image-mean NDVI.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::patches::{label_patches, Connectivity, Patch, PatchTable};
use crate::raster::{RasterStack, DEFAULT_CELL_SIZE_M, NIR, RED};
use crate::segmentation::{assign, KMeansModel};

pub const DEFAULT_THRESHOLD_CELLS: f64 = 5.0;

/// Shannon diversity over class proportions.
pub fn shdi(pt: &PatchTable) -> f64 {
    let z = pt.total_cells as f64;
    let mut h = 0.0;
    for a in pt.class_areas() {
        if a > 0 {
            let p = a as f64 / z;
            h -= p * p.ln();
        }
    }
    // -0.0 for a single class
    h.max(0.0)
}

/// Landscape-level patch cohesion in [0, 100]. `None` for one-cell landscapes.
pub fn cohesion(pt: &PatchTable) -> Option<f64> {
    let z = pt.total_cells as f64;
    if pt.total_cells <= 1 {
        return None;
    }
    let mut sum_p = 0.0;
    let mut sum_pa = 0.0;
    for p in &pt.patches {
        let per = p.perimeter_edges as f64;
        sum_p += per;
        sum_pa += per * (p.area_cells as f64).sqrt();
    }
    let v = 100.0 * (1.0 - sum_p / sum_pa) / (1.0 - 1.0 / z.sqrt());
    Some(v.clamp(0.0, 100.0))
}

struct Extent {
    x0: i64,
    x1: i64,
    y0: i64,
    y1: i64,
}

fn extent(p: &Patch, w: usize) -> Extent {
    let mut e = Extent {
        x0: i64::MAX,
        x1: i64::MIN,
        y0: i64::MAX,
        y1: i64::MIN,
    };
    for &c in &p.cells {
        let (x, y) = ((c as usize % w) as i64, (c as usize / w) as i64);
        e.x0 = e.x0.min(x);
        e.x1 = e.x1.max(x);
        e.y0 = e.y0.min(y);
        e.y1 = e.y1.max(y);
    }
    e
}

/// Whether two patches have cell centers within `threshold` cells.
/// The closest pair of cells always lies on the patch boundaries.
fn joined(
    a: &Extent,
    ab: &[(i64, i64)],
    b: &Extent,
    bb: &[(i64, i64)],
    threshold_sq: f64,
) -> bool {
    let gx = (a.x0 - b.x1).max(b.x0 - a.x1).max(0);
    let gy = (a.y0 - b.y1).max(b.y0 - a.y1).max(0);
    if ((gx * gx + gy * gy) as f64) > threshold_sq {
        return false;
    }
    ab.iter().any(|&(x1, y1)| {
        bb.iter().any(|&(x2, y2)| {
            let (dx, dy) = (x1 - x2, y1 - y2);
            ((dx * dx + dy * dy) as f64) <= threshold_sq
        })
    })
}

/// Percentage of same-class patch pairs joined within `threshold_cells`.
/// `None` when no class has two or more patches.
pub fn connectance(pt: &PatchTable, threshold_cells: f64) -> Option<f64> {
    let w = pt.width;
    let n_classes = pt.patches.iter().map(|p| p.class_id).max()? as usize + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, p) in pt.patches.iter().enumerate() {
        by_class[p.class_id as usize].push(i);
    }
    let threshold_sq = threshold_cells * threshold_cells;
    let mut joins = 0u64;
    let mut pairs = 0u64;
    for members in by_class.iter().filter(|m| m.len() >= 2) {
        let m = members.len() as u64;
        pairs += m * (m - 1) / 2;
        let info: Vec<(Extent, Vec<(i64, i64)>)> = members
            .iter()
            .map(|&i| {
                let p = &pt.patches[i];
                let cells = pt
                    .boundary_cells(p)
                    .into_iter()
                    .map(|c| ((c as usize % w) as i64, (c as usize / w) as i64))
                    .collect();
                (extent(p, w), cells)
            })
            .collect();
        for i in 0..info.len() {
            for j in i + 1..info.len() {
                if joined(&info[i].0, &info[i].1, &info[j].0, &info[j].1, threshold_sq) {
                    joins += 1;
                }
            }
        }
    }
    if pairs == 0 {
        None
    } else {
        Some(100.0 * joins as f64 / pairs as f64)
    }
}

/// Fractal dimension of one patch, `None` when ln(area) is zero.
pub fn patch_frac(p: &Patch, cell_size_m: f64) -> Option<f64> {
    let perim = p.perimeter_edges as f64 * cell_size_m;
    let area = p.area_cells as f64 * cell_size_m * cell_size_m;
    let ln_a = area.ln();
    if ln_a == 0.0 {
        None
    } else {
        Some(2.0 * (0.25 * perim).ln() / ln_a)
    }
}

/// Mean patch fractal dimension and the number of patches excluded because
/// their area is exactly one square meter.
pub fn frac_mn_counted(pt: &PatchTable) -> (Option<f64>, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut excluded = 0usize;
    for p in &pt.patches {
        match patch_frac(p, pt.cell_size_m) {
            Some(f) => {
                sum += f;
                n += 1;
            }
            None => excluded += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), excluded)
}

pub fn frac_mn(pt: &PatchTable) -> Option<f64> {
    frac_mn_counted(pt).0
}

/// Effective mesh size in hectares.
pub fn mesh(pt: &PatchTable) -> f64 {
    let cell_area = pt.cell_size_m * pt.cell_size_m;
    let total = pt.total_cells as f64 * cell_area;
    let sum_sq: f64 = pt
        .patches
        .iter()
        .map(|p| {
            let a = p.area_cells as f64 * cell_area;
            a * a
        })
        .sum();
    sum_sq / total * 1e-4
}

/// Image-mean NDVI over pixels with nonzero nir + red.
pub fn ndvi_mean(imagery: &RasterStack) -> Option<f64> {
    if imagery.channels() != 4 {
        return None;
    }
    let (red, nir) = (imagery.band(RED), imagery.band(NIR));
    let mut values: Vec<f64> = red
        .iter()
        .zip(nir)
        .filter_map(|(&r, &ni)| {
            let (r, ni) = (r as f64, ni as f64);
            let d = ni + r;
            (d != 0.0).then(|| (ni - r) / d)
        })
        .collect();
    // summing in sorted order makes the mean independent of pixel order
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let sum: f64 = values.iter().sum();
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub connectivity: Connectivity,
    pub threshold_cells: f64,
    pub cell_size_m: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            connectivity: Connectivity::Eight,
            threshold_cells: DEFAULT_THRESHOLD_CELLS,
            cell_size_m: DEFAULT_CELL_SIZE_M as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeMetrics {
    pub shdi: f64,
    pub cohesion: Option<f64>,
    pub connect: Option<f64>,
    pub frac_mn: Option<f64>,
    pub mesh_ha: f64,
    pub ndvi_mean: Option<f64>,
    pub n_patches: usize,
    pub frac_excluded: usize,
}

/// Metrics of a patch table (NDVI left empty).
pub fn landscape_metrics(pt: &PatchTable, threshold_cells: f64) -> LandscapeMetrics {
    let (frac, excluded) = frac_mn_counted(pt);
    LandscapeMetrics {
        shdi: shdi(pt),
        cohesion: cohesion(pt),
        connect: connectance(pt, threshold_cells),
        frac_mn: frac,
        mesh_ha: mesh(pt),
        ndvi_mean: None,
        n_patches: pt.patches.len(),
        frac_excluded: excluded,
    }
}

/// Segments `imagery` with `model`, then computes every metric.
pub fn compute_all(imagery: &RasterStack, model: &KMeansModel, cfg: &MetricConfig) -> Result<LandscapeMetrics> {
    let classes = assign(model, imagery)?;
    let pt = label_patches(&classes, cfg.connectivity, cfg.cell_size_m);
    let mut m = landscape_metrics(&pt, cfg.threshold_cells);
    m.ndvi_mean = ndvi_mean(imagery);
    Ok(m)
}

/// The six per-landscape quantities correlated between generated and target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Shdi,
    Cohesion,
    Connect,
    FracMn,
    MeshHa,
    NdviMean,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Shdi,
        Metric::Cohesion,
        Metric::Connect,
        Metric::FracMn,
        Metric::MeshHa,
        Metric::NdviMean,
    ];

    /// The five patch-structure metrics.
    pub const STRUCTURAL: [Metric; 5] = [
        Metric::Shdi,
        Metric::Cohesion,
        Metric::Connect,
        Metric::FracMn,
        Metric::MeshHa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Shdi => "shdi",
            Metric::Cohesion => "cohesion",
            Metric::Connect => "connect",
            Metric::FracMn => "frac_mn",
            Metric::MeshHa => "mesh_ha",
            Metric::NdviMean => "ndvi_mean",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Target,
    Generated,
}

/// One line of `metrics.csv`. Missing values serialize as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub sample_id: String,
    pub source: Source,
    pub model_name: String,
    pub k: usize,
    pub replicate: usize,
    pub shdi: Option<f64>,
    pub cohesion: Option<f64>,
    pub connect: Option<f64>,
    pub frac_mn: Option<f64>,
    pub mesh_ha: Option<f64>,
    pub ndvi_mean: Option<f64>,
    pub threshold_cells: f64,
    pub connectivity: u8,
}

impl MetricsRow {
    pub fn new(
        sample_id: &str,
        source: Source,
        model_name: &str,
        k: usize,
        replicate: usize,
        m: &LandscapeMetrics,
        cfg: &MetricConfig,
    ) -> Self {
        MetricsRow {
            sample_id: sample_id.to_string(),
            source,
            model_name: model_name.to_string(),
            k,
            replicate,
            shdi: Some(m.shdi),
            cohesion: m.cohesion,
            connect: m.connect,
            frac_mn: m.frac_mn,
            mesh_ha: Some(m.mesh_ha),
            ndvi_mean: m.ndvi_mean,
            threshold_cells: cfg.threshold_cells,
            connectivity: cfg.connectivity.as_int(),
        }
    }

    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Shdi => self.shdi,
            Metric::Cohesion => self.cohesion,
            Metric::Connect => self.connect,
            Metric::FracMn => self.frac_mn,
            Metric::MeshHa => self.mesh_ha,
            Metric::NdviMean => self.ndvi_mean,
        }
    }
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::IMAGERY_BANDS;
    use crate::segmentation::ClassRaster;

    fn table(w: usize, h: usize, labels: &[u32], cell: f64) -> PatchTable {
        let cr = ClassRaster::new(w, h, labels.to_vec()).unwrap();
        label_patches(&cr, Connectivity::Eight, cell)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn shdi_cases() {
        assert_eq!(shdi(&table(2, 2, &[1; 4], 1.0)), 0.0);
        assert!(close(shdi(&table(2, 1, &[0, 1], 1.0)), std::f64::consts::LN_2, 1e-15));
        let v = shdi(&table(4, 1, &[0, 0, 0, 1], 1.0));
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!(close(v, expected, 1e-15));
        assert!((v - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn cohesion_cases() {
        for n in 2..6 {
            let v = cohesion(&table(n, n, &vec![0; n * n], 43.0)).unwrap();
            assert!(close(v, 100.0, 1e-12), "{v}");
        }
        let checker: Vec<u32> = (0..16).map(|i| ((i % 4 + i / 4) % 2) as u32).collect();
        let t = label_patches(&ClassRaster::new(4, 4, checker).unwrap(), Connectivity::Four, 1.0);
        assert_eq!(cohesion(&t), Some(0.0));
        assert_eq!(cohesion(&table(1, 1, &[0], 1.0)), None);
    }

    #[test]
    fn cohesion_two_patches_closed_form() {
        // 2x2 block in the corner of a 4x4: block (area 4, perimeter 8),
        // L-shaped remainder (area 12, perimeter 16), Z = 16.
        let labels = [1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        let t = table(4, 4, &labels, 1.0);
        let mut shapes: Vec<(usize, usize)> =
            t.patches.iter().map(|p| (p.area_cells, p.perimeter_edges)).collect();
        shapes.sort();
        assert_eq!(shapes, vec![(4, 8), (12, 16)]);
        let sum_p = 16.0 + 8.0;
        let sum_pa = 16.0 * 12f64.sqrt() + 8.0 * 2.0;
        let expected = 100.0 * (1.0 - sum_p / sum_pa) / (1.0 - 1.0 / 4.0);
        assert!(close(cohesion(&t).unwrap(), expected, 1e-12));
    }

    #[test]
    fn connectance_cases() {
        assert_eq!(connectance(&table(2, 1, &[0, 1], 1.0), 5.0), None);
        // two class-0 cells with one class-1 cell between them
        let t = table(3, 1, &[0, 1, 0], 1.0);
        assert_eq!(connectance(&t, 5.0), Some(100.0));
        // three single-cell patches at x = 0, 3, 9 with threshold 6:
        // pairs (0,3) d=3 yes, (3,9) d=6 yes, (0,9) d=9 no; the two class-1
        // runs 1..=2 and 4..=8 are 2 apart -> 3 of 4 pairs
        let mut labels = vec![1u32; 10];
        for x in [0, 3, 9] {
            labels[x] = 0;
        }
        let t = table(10, 1, &labels, 1.0);
        let v = connectance(&t, 6.0).unwrap();
        assert!(close(v, 75.0, 1e-12));
    }

    #[test]
    fn frac_cases() {
        for s in [1.5, 43.0, 100.0] {
            let t = table(1, 1, &[0], s);
            assert!(close(frac_mn(&t).unwrap(), 1.0, 1e-12));
            let t = table(3, 3, &[0; 9], s);
            assert!(close(frac_mn(&t).unwrap(), 1.0, 1e-12));
        }
        let t = table(8, 1, &[0; 8], 43.0);
        assert_eq!(t.patches[0].perimeter_edges, 18);
        let expected = 2.0 * (0.25 * 18.0 * 43.0f64).ln() / (8.0 * 43.0f64 * 43.0).ln();
        assert!(close(frac_mn(&t).unwrap(), expected, 1e-12));
        // 1 m cells: single-cell patches have ln(a) = 0 and are excluded
        let t = table(2, 1, &[0, 1], 1.0);
        assert_eq!(frac_mn_counted(&t), (None, 2));
    }

    #[test]
    fn mesh_cases() {
        let t = table(10, 10, &[0; 100], 100.0);
        assert!(close(mesh(&t), 100.0, 1e-12));
        let labels: Vec<u32> = (0..100).map(|i| u32::from(i >= 60)).collect();
        let t = table(10, 10, &labels, 100.0);
        assert!(close(mesh(&t), 52.0, 1e-12));
        let checker: Vec<u32> = (0..16).map(|i| ((i % 4 + i / 4) % 2) as u32).collect();
        let t = label_patches(&ClassRaster::new(4, 4, checker).unwrap(), Connectivity::Four, 20.0);
        assert!(close(mesh(&t), 400.0 / 1e4, 1e-12));
    }

    fn imagery(red: f32, nir: f32) -> RasterStack {
        let bands = vec![vec![0.1; 4], vec![0.1; 4], vec![red; 4], vec![nir; 4]];
        RasterStack::from_bands(2, 2, &IMAGERY_BANDS, 43.0, bands).unwrap()
    }

    #[test]
    fn ndvi_cases() {
        assert_eq!(ndvi_mean(&imagery(0.3, 0.3)), Some(0.0));
        assert_eq!(ndvi_mean(&imagery(0.0, 1.0)), Some(1.0));
        assert!(close(ndvi_mean(&imagery(0.2, 0.6)).unwrap(), 0.5, 1e-6));
        assert_eq!(ndvi_mean(&imagery(0.0, 0.0)), None);
    }

    #[test]
    fn uniform_imagery_metrics() {
        let img = imagery(0.2, 0.6);
        let model = KMeansModel {
            k: 2,
            seed: 0,
            iterations_run: 0,
            inertia: 0.0,
            centroids: vec![[0.1, 0.1, 0.2, 0.6], [0.9; 4]],
            inertia_history: vec![],
        };
        let m = compute_all(&img, &model, &MetricConfig::default()).unwrap();
        assert_eq!(m.shdi, 0.0);
        assert!(close(m.cohesion.unwrap(), 100.0, 1e-12));
        assert_eq!(m.connect, None);
        assert!(close(m.frac_mn.unwrap(), 1.0, 1e-12));
        assert!(close(m.mesh_ha, 4.0 * 43.0 * 43.0 / 1e4, 1e-12));
        assert_eq!(m, compute_all(&img, &model, &MetricConfig::default()).unwrap());
    }

    #[test]
    fn metrics_csv_renders_missing_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let m = LandscapeMetrics {
            shdi: 0.5,
            cohesion: Some(90.0),
            connect: None,
            frac_mn: Some(1.1),
            mesh_ha: 3.0,
            ndvi_mean: Some(0.25),
            n_patches: 3,
            frac_excluded: 0,
        };
        let row = MetricsRow::new("s1", Source::Target, "target", 8, 0, &m, &MetricConfig::default());
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &[row.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sample_id,source,model_name,k,replicate,shdi,cohesion,connect,frac_mn,mesh_ha,ndvi_mean,threshold_cells,connectivity"
        );
        assert_eq!(lines.next().unwrap(), "s1,target,target,8,0,0.5,90.0,,1.1,3.0,0.25,5.0,8");
        assert_eq!(read_metrics_csv(&path).unwrap(), vec![row]);
    }
}
