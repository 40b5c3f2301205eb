//! Counterfactual climate sweep: train the baseline, then shift temperature
//! (columns) and precipitation (rows) of one sample and write the mosaic.
//!
//! cargo run --release --example climate_sweep -- [out_dir]

use landkit::harness::models::FcGenerator;
use landkit::harness::sweep::{counterfactual_sweep, SweepConfig};
use landkit::mlp::{train_fc_on, TrainConfig};
use landkit::synth::{gen_samples, WorldConfig};

fn main() -> landkit::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-sweep".into()));
    let world = WorldConfig {
        seed: 21,
        n_samples: 60,
        width: 48,
        height: 48,
        ..WorldConfig::default()
    };
    let samples = gen_samples(&world)?;
    let train: Vec<_> = samples[1..].iter().collect();
    let fc = train_fc_on(
        &train,
        &TrainConfig {
            epochs: 6,
            ..TrainConfig::default()
        },
    )?;

    let grid = vec![-0.2, -0.1, 0.0, 0.1, 0.2];
    let cfg = SweepConfig::new(grid.clone(), grid);
    let target = &samples[0];
    let res = counterfactual_sweep(&FcGenerator { model: &fc }, &target.id, &target.conditions, &cfg)?;
    std::fs::create_dir_all(&out)?;
    res.write_png(out.join("mosaic.png"))?;
    res.write_table(out.join("sweep.csv"))?;

    println!("ndvi_mean by (d_precip row, d_temp column):");
    for row in res.cells.chunks(cfg.d_temp.len()) {
        let line: Vec<String> = row.iter().map(|c| format!("{:>7.3}", c.ndvi_mean.unwrap_or(f64::NAN))).collect();
        println!("dp {:>5.2}: {}", row[0].d_precip, line.join(" "));
    }
    println!("mosaic {}x{} written to {}", res.mosaic.width(), res.mosaic.height(), out.display());
    Ok(())
}
