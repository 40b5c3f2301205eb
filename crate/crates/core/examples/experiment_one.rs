//! Experiment One at small scale: synthesize a world, split 80/20 at random,
//! train the per-pixel baseline and compare it with the reference models.
//!
//! cargo run --release --example experiment_one -- [out_dir] [n_samples]

use std::time::Instant;

use landkit::harness::experiment::{run_experiment_one, ExperimentConfig};
use landkit::metrics::Metric;
use landkit::synth::{gen_dataset, WorldConfig};

fn main() -> landkit::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "target/example-exp1".into()));
    let n: usize = args.next().map_or(512, |s| s.parse().expect("n_samples"));

    let t0 = Instant::now();
    let world = WorldConfig {
        seed: 7,
        n_samples: n,
        ..WorldConfig::default()
    };
    gen_dataset(&world, out.join("dataset"))?;
    println!("dataset: {:.1}s", t0.elapsed().as_secs_f64());

    let cfg = ExperimentConfig {
        dataset: out.join("dataset"),
        out: out.join("run"),
        ..ExperimentConfig::default()
    };
    let res = run_experiment_one(&cfg)?;
    println!("experiment: {:.1}s", t0.elapsed().as_secs_f64());

    for row in &res.report.rows {
        if row.k == cfg.eval.k_list[0] || row.metric != Metric::NdviMean.name() {
            println!(
                "{:<9} k={:<3} {:<10} bicor={}",
                row.model_name,
                row.k,
                row.metric,
                landkit::stats::fmt_corr(row.bicor_mean)
            );
        }
    }
    Ok(())
}
