//! Fit K-means on a few synthetic images, segment one of them and print its
//! patches and landscape metrics.

use landkit::metrics::{landscape_metrics, ndvi_mean, DEFAULT_THRESHOLD_CELLS};
use landkit::patches::{label_patches, Connectivity};
use landkit::segmentation::{fit_kmeans, sample_pixels, DEFAULT_MAX_ITER, DEFAULT_TOL};
use landkit::synth::{gen_samples, WorldConfig};

fn main() -> landkit::Result<()> {
    let cfg = WorldConfig {
        seed: 5,
        n_samples: 12,
        ..WorldConfig::default()
    };
    let samples = gen_samples(&cfg)?;
    let images: Vec<_> = samples.iter().map(|s| &s.imagery).collect();

    let k = 8;
    let pixels = sample_pixels(&images, 4000, 6, 0)?;
    let model = fit_kmeans(&pixels, k, 0, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    println!("k={k}: inertia {:.5} after {} iterations", model.inertia, model.iterations_run);

    let img = &samples[0].imagery;
    let classes = model.assign(img)?;
    let table = label_patches(&classes, Connectivity::Eight, img.cell_size_m() as f64);
    println!("{} patches in {}x{} cells", table.patches.len(), table.width, table.height);
    for (class, area) in table.class_areas().iter().enumerate() {
        println!("  class {class}: {area} cells");
    }
    let m = landscape_metrics(&table, DEFAULT_THRESHOLD_CELLS);
    println!("SHDI     {:.4}", m.shdi);
    println!("COHESION {:?}", m.cohesion);
    println!("CONNECT  {:?}", m.connect);
    println!("FRAC_MN  {:?} ({} single-cell patches excluded)", m.frac_mn, m.frac_excluded);
    println!("MESH     {:.2} ha", m.mesh_ha);
    println!("NDVI     {:?}", ndvi_mean(img));
    Ok(())
}
