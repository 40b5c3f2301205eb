//! Generate a small synthetic world and summarize it.
//!
//! cargo run --release --example synth_world -- [out_dir]

use landkit::dataset::DatasetManifest;
use landkit::metrics::ndvi_mean;
use landkit::synth::{gen_dataset, WorldConfig, PRECIPITATION, TEMPERATURE};

fn main() -> landkit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example-world".into());
    let cfg = WorldConfig {
        seed: 42,
        n_samples: 24,
        width: 48,
        height: 48,
        ..WorldConfig::default()
    };
    gen_dataset(&cfg, &out)?;

    let m = DatasetManifest::load(&out)?;
    println!("{} samples, predictors {:?}", m.len(), m.info.predictor_names);
    println!("{:<8} {:>8} {:>9} {:<5} {:>6} {:>6} {:>6}", "id", "lat", "lon", "reg", "temp", "precip", "ndvi");
    for e in m.entries.iter().take(10) {
        let s = m.load_sample(e)?;
        let mean = |name: &str| {
            let b = s.conditions.band_by_name(name).unwrap();
            b.iter().map(|&v| v as f64).sum::<f64>() / b.len() as f64
        };
        println!(
            "{:<8} {:>8.3} {:>9.3} {:<5} {:>6.3} {:>6.3} {:>6.3}",
            s.id,
            s.lat,
            s.lon,
            s.region,
            mean(TEMPERATURE),
            mean(PRECIPITATION),
            ndvi_mean(&s.imagery).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
