use std::fs;

use landkit::harness::evaluate::{evaluate, EvalConfig, GeneratedSet};
use landkit::harness::experiment::{run_experiment, run_experiment_one, ExperimentConfig};
use landkit::harness::models::{constant_imagery, ModelSpec};
use landkit::metrics::{read_metrics_csv, Metric};
use landkit::mlp::{shuffle_pixels, TrainConfig};
use landkit::raster::RasterStack;
use landkit::splits::{SplitAssignment, SplitDesign};
use landkit::stats::CorrelationReport;
use landkit::synth::{gen_dataset, gen_samples, WorldConfig};

fn targets(n: usize, seed: u64) -> (Vec<landkit::Sample>, Vec<(String, RasterStack)>) {
    let samples = gen_samples(&WorldConfig {
        seed,
        n_samples: n,
        width: 32,
        height: 32,
        ..WorldConfig::default()
    })
    .unwrap();
    let t = samples.iter().map(|s| (s.id.clone(), s.imagery.clone())).collect();
    (samples, t)
}

fn quick() -> EvalConfig {
    EvalConfig {
        k_list: vec![5, 12],
        replicates: 2,
        ..EvalConfig::default()
    }
}

#[test]
fn identity_constant_and_shuffled_generators() {
    let (samples, t) = targets(60, 1);
    let identity = GeneratedSet {
        model_name: "identity".into(),
        images: t.iter().map(|(_, r)| Some(r.clone())).collect(),
    };
    let gray = GeneratedSet {
        model_name: "gray".into(),
        images: t.iter().map(|(_, r)| Some(constant_imagery(r, [0.2, 0.2, 0.2, 0.3]))).collect(),
    };
    let shuffled = GeneratedSet {
        model_name: "shuffled".into(),
        images: samples.iter().enumerate().map(|(i, s)| Some(shuffle_pixels(s, i as u64).imagery)).collect(),
    };
    let ev = evaluate(&t, &[identity, gray, shuffled], &quick(), "random").unwrap();
    assert_eq!(ev.kmeans.len(), 4);
    assert_eq!(ev.report.warning_count(), 0);

    for k in [5, 12] {
        for m in Metric::ALL {
            let id = ev.report.get("identity", "random", k, m).unwrap();
            assert!((id.bicor_mean.unwrap() - 1.0).abs() <= 1e-12, "{m:?}");
            assert_eq!(id.n_replicates, 2);
            let g = ev.report.get("gray", "random", k, m).unwrap();
            assert!(g.bicor_mean.map_or(true, |v| v.abs() < 0.1), "{m:?} {g:?}");
        }
        let s = |m| ev.report.get("shuffled", "random", k, m).unwrap().bicor_mean.unwrap();
        assert!((s(Metric::NdviMean) - 1.0).abs() <= 1e-12);
        let structural: f64 = Metric::STRUCTURAL.iter().map(|&m| s(m)).sum::<f64>() / 5.0;
        assert!(structural < 0.9, "k={k}: {structural}");
    }
}

#[test]
fn all_missing_generated_is_an_error() {
    let (_, t) = targets(10, 2);
    let none = GeneratedSet {
        model_name: "none".into(),
        images: vec![None; 10],
    };
    assert!(evaluate(&t, &[none], &quick(), "random").is_err());
}

fn small_experiment(dir: &std::path::Path, n: usize) -> ExperimentConfig {
    gen_dataset(
        &WorldConfig {
            seed: 3,
            n_samples: n,
            width: 32,
            height: 32,
            west_temperature_offset: 0.3,
            ..WorldConfig::default()
        },
        dir.join("ds"),
    )
    .unwrap();
    ExperimentConfig {
        dataset: dir.join("ds"),
        out: dir.join("run"),
        train: TrainConfig {
            epochs: 2,
            hidden_layers: vec![16, 16],
            ..TrainConfig::default()
        },
        eval: quick(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn experiment_one_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_experiment(dir.path(), 200);
    let out = run_experiment_one(&cfg).unwrap();
    let run = &cfg.out;
    for f in ["run.json", "report.csv", "report.svg", "ndvi_table.csv", "random/split.json", "random/metrics.csv", "random/fc/fc_model.bin", "random/fc/fc_model.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let split = SplitAssignment::read_file(run.join("random/split.json")).unwrap();
    assert_eq!(split.test.len(), 40);

    // identity dominates every other model on every metric
    for r in out.report.rows.iter().filter(|r| r.model_name == "identity") {
        assert!((r.bicor_mean.unwrap() - 1.0).abs() <= 1e-12);
    }
    let ndvi = |m: &str| out.ndvi.iter().find(|r| r.model_name == m).unwrap().bicor_mean;
    assert!(ndvi("fc").unwrap() > 0.0);
    assert_eq!(ndvi("mean"), None);

    // CSV round trip and metric rows
    let back = CorrelationReport::read_csv(run.join("report.csv")).unwrap();
    assert_eq!(back.rows.len(), out.report.rows.len());
    let rows = read_metrics_csv(run.join("random/metrics.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 40 * 4);

    let json: serde_json::Value = serde_json::from_slice(&fs::read(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["eval"]["replicates"], 2);
    assert_eq!(json["config"]["train"]["epochs"], 2);
}

#[test]
fn three_designs_give_three_strata_and_infeasible_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_experiment(dir.path(), 120);
    cfg.models = vec![ModelSpec::MeanPredictor];
    cfg.designs = vec![
        SplitDesign::Random { test_frac: 0.2 },
        SplitDesign::Buffered {
            d_min_km: 100.0,
            test_frac: 0.2,
        },
        SplitDesign::HoldoutRegion { region: "west".into() },
        SplitDesign::HoldoutRegion { region: "atlantis".into() },
    ];
    let out = run_experiment(&cfg).unwrap();
    let strata: std::collections::BTreeSet<&str> = out.report.rows.iter().map(|r| r.split_design.as_str()).collect();
    assert_eq!(strata.len(), 3);
    assert_eq!(out.skipped.len(), 1);
    let buffered = out.designs.iter().find(|d| d.label.starts_with("buffered")).unwrap();
    assert!(buffered.min_cross_distance_km.unwrap() >= 100.0);
    assert!(cfg.out.join("skipped.txt").exists());

    cfg.designs = vec![SplitDesign::HoldoutRegion { region: "atlantis".into() }];
    assert!(matches!(run_experiment(&cfg), Err(landkit::Error::Infeasible(_))));
}
