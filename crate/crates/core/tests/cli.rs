use std::path::Path;
use std::process::{Command, Output};

fn landkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landkit")).args(args).output().expect("spawn landkit")
}

fn ok(args: &[&str]) -> Output {
    let out = landkit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn has_run_json(dir: &Path, command: &str) {
    let text = std::fs::read_to_string(dir.join("run.json")).unwrap_or_else(|_| panic!("no run.json in {dir:?}"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], command);
    assert!(v["config"].is_object());
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let (ds, sp, fc, pr, seg, ev, sw, rep) = (
        t.join("ds"),
        t.join("split"),
        t.join("fc"),
        t.join("pred"),
        t.join("seg"),
        t.join("eval"),
        t.join("sweep"),
        t.join("rep"),
    );

    ok(&["synth", "--out", p(&ds), "--seed", "4", "--n-samples", "40", "--width", "24", "--height", "24"]);
    has_run_json(&ds, "synth");
    assert!(ds.join("dataset.json").exists() && ds.join("manifest.jsonl").exists());

    ok(&["split", "--dataset", p(&ds), "--out", p(&sp), "--seed", "1"]);
    has_run_json(&sp, "split");
    let split = sp.join("split.json");

    ok(&[
        "train-fc", "--dataset", p(&ds), "--split", p(&split), "--out", p(&fc), "--epochs", "1", "--hidden", "8,8",
    ]);
    has_run_json(&fc, "train-fc");
    assert!(fc.join("fc_model.bin").exists() && fc.join("loss.csv").exists());

    ok(&["predict", "--dataset", p(&ds), "--model", p(&fc), "--split", p(&split), "--out", p(&pr)]);
    has_run_json(&pr, "predict");
    let n_pred = std::fs::read_dir(&pr).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "lscp")).count();
    assert_eq!(n_pred, 8);

    ok(&["segment", "--dataset", p(&ds), "--split", p(&split), "--out", p(&seg), "--k", "6"]);
    has_run_json(&seg, "segment");
    assert_eq!(std::fs::read_dir(seg.join("classes")).unwrap().count(), 8);

    let mcsv = t.join("m/metrics.csv");
    ok(&["metrics", "--images", p(&pr), "--kmeans", p(&seg.join("kmeans.json")), "--out", p(&mcsv), "--name", "fc"]);
    has_run_json(&t.join("m"), "metrics");
    assert_eq!(std::fs::read_to_string(&mcsv).unwrap().lines().count(), 9);

    ok(&[
        "evaluate", "--dataset", p(&ds), "--split", p(&split), "--generated", p(&pr), "--name", "fc", "--out", p(&ev),
        "--k", "4,6", "--replicates", "2", "--threshold-cells", "5", "--connectivity", "8",
    ]);
    has_run_json(&ev, "evaluate");
    let report = ev.join("report.csv");
    assert!(report.exists() && ev.join("report.svg").exists() && ev.join("metrics.csv").exists());

    let sample = std::fs::read_to_string(ds.join("manifest.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(sample.lines().next().unwrap()).unwrap();
    let id = first["id"].as_str().unwrap();
    ok(&[
        "sweep", "--dataset", p(&ds), "--sample", id, "--model", p(&fc), "--d-temp", "-0.1,0,0.1", "--d-precip",
        "-0.2,0", "--out", p(&sw),
    ]);
    has_run_json(&sw, "sweep");
    assert!(sw.join("mosaic.png").exists());
    assert_eq!(std::fs::read_to_string(sw.join("sweep.csv")).unwrap().lines().count(), 7);

    ok(&["report", "--input", p(&report), "--out", p(&rep)]);
    has_run_json(&rep, "report");
    assert_eq!(
        std::fs::read_to_string(rep.join("report.svg")).unwrap(),
        std::fs::read_to_string(ev.join("report.svg")).unwrap()
    );
}

#[test]
fn experiments_from_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let ds = t.join("ds");
    ok(&["synth", "--out", p(&ds), "--n-samples", "60", "--width", "20", "--height", "20"]);
    for cmd in ["exp1", "exp2"] {
        let out = t.join(cmd);
        let o = ok(&[
            cmd, "--dataset", p(&ds), "--out", p(&out), "--model", "mean", "--model", "identity", "--k", "4",
            "--replicates", "2", "--seed", "3",
        ]);
        has_run_json(&out, "experiment");
        assert!(out.join("report.svg").exists() && out.join("ndvi_table.csv").exists());
        assert!(String::from_utf8_lossy(&o.stdout).contains("identity"));
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let ds = t.join("ds");
    ok(&["synth", "--out", p(&ds), "--n-samples", "12", "--width", "8", "--height", "8"]);

    let bad_size = landkit(&["synth", "--out", p(&t.join("x")), "--width", "0"]);
    assert_eq!(bad_size.status.code(), Some(2));

    let bad_conn = landkit(&[
        "evaluate", "--targets", p(&ds), "--generated", p(&ds), "--out", p(&t.join("e")), "--connectivity", "5",
    ]);
    assert_eq!(bad_conn.status.code(), Some(2));

    let infeasible = landkit(&[
        "split", "--dataset", p(&ds), "--out", p(&t.join("s")), "--design", "holdout", "--region", "atlantis",
    ]);
    assert_eq!(infeasible.status.code(), Some(3), "{}", String::from_utf8_lossy(&infeasible.stderr));

    let exp = landkit(&["exp2", "--dataset", p(&ds), "--out", p(&t.join("x2")), "--model", "banana"]);
    assert_eq!(exp.status.code(), Some(2));
}
