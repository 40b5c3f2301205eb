use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use landkit::dataset::DatasetManifest;
use landkit::harness::evaluate::{evaluate, EvalConfig, GeneratedSet};
use landkit::harness::experiment::{run_experiment_one, run_experiment_two, ExperimentConfig};
use landkit::harness::models::{read_raster_dir, ExternalCommand, FcGenerator, Generator, ModelSpec};
use landkit::harness::report::render_report;
use landkit::harness::sweep::{counterfactual_sweep, SweepConfig};
use landkit::harness::write_run_record;
use landkit::metrics::{compute_all, write_metrics_csv, MetricConfig, MetricsRow, Source};
use landkit::mlp::{train_fc, Optimizer, TrainConfig, TrainedFc};
use landkit::patches::Connectivity;
use landkit::raster::RasterStack;
use landkit::segmentation::{fit_kmeans, sample_pixels, KMeansModel, DEFAULT_MAX_ITER, DEFAULT_TOL};
use landkit::splits::{make_split, Role, SplitAssignment, SplitDesign};
use landkit::stats::CorrelationReport;
use landkit::synth::{gen_dataset, WorldConfig};
use landkit::{Error, Result};

#[derive(Parser)]
#[command(name = "landkit", version, about = "Generate, segment and compare landscapes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset of (conditions, imagery) pairs.
    Synth(SynthArgs),
    /// Split a dataset into train/test sets.
    Split(SplitArgs),
    /// Train the per-pixel fully connected baseline.
    TrainFc(TrainArgs),
    /// Predict imagery with a trained baseline.
    Predict(PredictArgs),
    /// Fit K-means on imagery and write class rasters.
    Segment(SegmentArgs),
    /// Landscape metrics of imagery under a fitted K-means model.
    Metrics(MetricsArgs),
    /// Evaluate a directory of generated imagery against targets.
    Evaluate(EvaluateArgs),
    /// Experiment One: random 80/20 split.
    Exp1(ExpArgs),
    /// Experiment Two: random, buffered and regional holdout splits.
    Exp2(ExpArgs),
    /// Counterfactual climate sweep over one sample.
    Sweep(SweepArgs),
    /// Render report.svg from a report.csv.
    Report(ReportArgs),
}

fn parse_connectivity(s: &str) -> std::result::Result<Connectivity, String> {
    let n: u8 = s.parse().map_err(|_| format!("expected 4 or 8, got {s:?}"))?;
    Connectivity::from_int(n).map_err(|e| e.to_string())
}

#[derive(Args, Clone, Serialize)]
struct EvalArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cluster counts to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "8,20,60")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    replicates: usize,
    /// CONNECT distance threshold in cells.
    #[arg(long, default_value_t = 5.0)]
    threshold_cells: f64,
    #[arg(long, default_value = "8", value_parser = parse_connectivity)]
    connectivity: Connectivity,
    /// Images per K-means fit (default: 8% of targets).
    #[arg(long)]
    fit_images: Option<usize>,
    /// Pixels per K-means fit (default: 3% of the drawn images' pixels).
    #[arg(long)]
    fit_pixels: Option<usize>,
}

impl EvalArgs {
    fn config(&self, cell_size_m: f64) -> EvalConfig {
        EvalConfig {
            k_list: self.k.clone(),
            replicates: self.replicates,
            images_per_fit: self.fit_images,
            pixels_per_fit: self.fit_pixels,
            seed: self.seed,
            metric: MetricConfig {
                connectivity: self.connectivity,
                threshold_cells: self.threshold_cells,
                cell_size_m,
            },
            ..EvalConfig::default()
        }
    }
}

#[derive(Args, Clone, Serialize)]
struct TrainOpts {
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Pixels drawn from each training image per epoch.
    #[arg(long, default_value_t = 512)]
    pixels_per_image: usize,
    #[arg(long, value_delimiter = ',', default_value = "64,256,364")]
    hidden: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum OptimizerArg {
    Sgd,
    Adam,
}

impl TrainOpts {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            optimizer: match self.optimizer {
                OptimizerArg::Sgd => Optimizer::Sgd,
                OptimizerArg::Adam => Optimizer::default(),
            },
            seed,
            hidden_layers: self.hidden.clone(),
            pixels_per_image: self.pixels_per_image,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON world configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    #[arg(long)]
    latent_noise_weight: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    west_temperature_offset: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum DesignArg {
    Random,
    Buffered,
    Holdout,
}

#[derive(Args)]
struct DesignOpts {
    #[arg(long, value_enum, default_value_t = DesignArg::Random)]
    design: DesignArg,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
    #[arg(long, default_value_t = 100.0)]
    d_min_km: f64,
    #[arg(long, default_value = "west")]
    region: String,
}

impl DesignOpts {
    fn design(&self) -> SplitDesign {
        match self.design {
            DesignArg::Random => SplitDesign::Random {
                test_frac: self.test_frac,
            },
            DesignArg::Buffered => SplitDesign::Buffered {
                d_min_km: self.d_min_km,
                test_frac: self.test_frac,
            },
            DesignArg::Holdout => SplitDesign::HoldoutRegion {
                region: self.region.clone(),
            },
        }
    }
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    design: DesignOpts,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// split.json; all samples are used for training when absent.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    train: TrainOpts,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory holding fc_model.bin and fc_model.json.
    #[arg(long)]
    model: PathBuf,
    /// Predict only the test samples of this split.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImageSource {
    /// Dataset whose imagery is used.
    #[arg(long, conflicts_with = "images")]
    dataset: Option<PathBuf>,
    /// Restrict dataset imagery to the test samples of this split.
    #[arg(long, requires = "dataset")]
    split: Option<PathBuf>,
    /// Directory of imagery `.lscp` files.
    #[arg(long)]
    images: Option<PathBuf>,
}

impl ImageSource {
    fn load(&self) -> Result<Vec<(String, RasterStack)>> {
        match (&self.dataset, &self.images) {
            (Some(d), _) => {
                let split = self.split.as_deref().map(SplitAssignment::read_file).transpose()?;
                dataset_imagery(d, split.as_ref())
            }
            (None, Some(dir)) => Ok(read_raster_dir(dir)?.into_iter().collect()),
            (None, None) => Err(Error::InvalidInput("give --dataset or --images".into())),
        }
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    source: ImageSource,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long)]
    fit_images: Option<usize>,
    #[arg(long)]
    fit_pixels: Option<usize>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    source: ImageSource,
    /// kmeans.json written by `segment`.
    #[arg(long)]
    kmeans: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "target")]
    name: String,
    #[arg(long, default_value_t = 5.0)]
    threshold_cells: f64,
    #[arg(long, default_value = "8", value_parser = parse_connectivity)]
    connectivity: Connectivity,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of target imagery; alternatively --dataset with --split.
    #[arg(long, conflicts_with = "dataset")]
    targets: Option<PathBuf>,
    #[arg(long, requires = "split")]
    dataset: Option<PathBuf>,
    #[arg(long)]
    split: Option<PathBuf>,
    /// Directory of generated `<sample_id>.lscp` files.
    #[arg(long)]
    generated: PathBuf,
    #[arg(long, default_value = "generated")]
    name: String,
    /// Design label written into the report.
    #[arg(long, default_value = "external")]
    design_label: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args)]
struct ExpArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Models to evaluate: fc, mean, identity, or name=dir for pre-generated imagery.
    #[arg(long = "model", default_values = ["fc", "mean", "identity"])]
    models: Vec<String>,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    train: TrainOpts,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    sample: String,
    /// Trained baseline directory.
    #[arg(long, conflicts_with = "command")]
    model: Option<PathBuf>,
    /// External generator command; `{in}` and `{out}` are replaced by directories.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    command: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    d_temp: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    d_precip: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.csv file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn dataset_imagery(dir: &Path, split: Option<&SplitAssignment>) -> Result<Vec<(String, RasterStack)>> {
    let m = DatasetManifest::load(dir)?;
    m.entries
        .iter()
        .filter(|e| split.map_or(true, |s| s.role(&e.id) == Some(Role::Test)))
        .map(|e| Ok((e.id.clone(), RasterStack::read_file(m.root.join(&e.imagery_path))?)))
        .collect()
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg: WorldConfig = match &a.config {
        Some(p) => serde_json::from_reader(std::fs::File::open(p)?)?,
        None => WorldConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = a.width {
        cfg.width = v;
    }
    if let Some(v) = a.height {
        cfg.height = v;
    }
    if let Some(v) = a.predictors {
        cfg.predictor_set = v;
    }
    if let Some(v) = a.latent_noise_weight {
        cfg.latent_noise_weight = v;
    }
    if let Some(v) = a.west_temperature_offset {
        cfg.west_temperature_offset = v;
    }
    let m = gen_dataset(&cfg, &a.out)?;
    write_run_record(&a.out, "synth", &cfg)?;
    println!("wrote {} samples to {}", m.len(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let m = DatasetManifest::load(&a.dataset)?;
    let design = a.design.design();
    let s = make_split(&m.entries, &design, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    s.write_file(a.out.join("split.json"))?;
    #[derive(Serialize)]
    struct Rec<'a> {
        dataset: &'a Path,
        seed: u64,
        design: &'a SplitDesign,
    }
    write_run_record(
        &a.out,
        "split",
        &Rec {
            dataset: &a.dataset,
            seed: a.seed,
            design: &design,
        },
    )?;
    println!(
        "{}: {} train, {} test, {} quarantined",
        design.label(),
        s.train.len(),
        s.test.len(),
        s.quarantined.len()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let m = DatasetManifest::load(&a.dataset)?;
    let samples = m.load_all()?;
    let split = match &a.split {
        Some(p) => SplitAssignment::read_file(p)?,
        None => SplitAssignment {
            design: SplitDesign::Random { test_frac: 0.0 },
            seed: 0,
            train: m.ids(),
            test: vec![],
            quarantined: vec![],
        },
    };
    let cfg = a.train.config(a.seed);
    let fc = train_fc(&samples, &split, &cfg)?;
    fc.save(&a.out)?;
    #[derive(Serialize)]
    struct Rec<'a> {
        dataset: &'a Path,
        split: &'a Option<PathBuf>,
        train: &'a TrainConfig,
    }
    write_run_record(
        &a.out,
        "train-fc",
        &Rec {
            dataset: &a.dataset,
            split: &a.split,
            train: &cfg,
        },
    )?;
    let mut w = csv::Writer::from_path(a.out.join("loss.csv"))?;
    w.write_record(["epoch", "mse"])?;
    for (i, l) in fc.loss_curve.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;
    println!("final loss {:?}", fc.loss_curve.last());
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let fc = TrainedFc::load(&a.model)?;
    let m = DatasetManifest::load(&a.dataset)?;
    let split = a.split.as_deref().map(SplitAssignment::read_file).transpose()?;
    std::fs::create_dir_all(&a.out)?;
    let mut n = 0;
    for e in &m.entries {
        if split.as_ref().is_some_and(|s| s.role(&e.id) != Some(Role::Test)) {
            continue;
        }
        let c = RasterStack::read_file(m.root.join(&e.conditions_path))?;
        fc.predict(&c)?.write_file(a.out.join(format!("{}.lscp", e.id)))?;
        n += 1;
    }
    #[derive(Serialize)]
    struct Rec<'a> {
        dataset: &'a Path,
        model: &'a Path,
        split: &'a Option<PathBuf>,
    }
    write_run_record(
        &a.out,
        "predict",
        &Rec {
            dataset: &a.dataset,
            model: &a.model,
            split: &a.split,
        },
    )?;
    println!("wrote {n} predictions to {}", a.out.display());
    Ok(())
}

fn segment(a: SegmentArgs) -> Result<()> {
    let images = a.source.load()?;
    if images.is_empty() {
        return Err(Error::InvalidInput("no imagery found".into()));
    }
    let eval = EvalConfig {
        images_per_fit: a.fit_images,
        pixels_per_fit: a.fit_pixels,
        ..EvalConfig::default()
    };
    let refs: Vec<&RasterStack> = images.iter().map(|(_, r)| r).collect();
    let (n_images, n_pixels) = eval.fit_budget(&refs, a.k);
    let pixels = sample_pixels(&refs, n_pixels, n_images, a.seed)?;
    let model = fit_kmeans(&pixels, a.k, a.seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let classes = a.out.join("classes");
    std::fs::create_dir_all(&classes)?;
    model.write_file(a.out.join("kmeans.json"))?;
    for (id, img) in &images {
        model
            .assign(img)?
            .to_raster(img.cell_size_m())
            .write_file(classes.join(format!("{id}.lscp")))?;
    }
    #[derive(Serialize)]
    struct Rec {
        k: usize,
        seed: u64,
        fit_images: usize,
        fit_pixels: usize,
        n_images: usize,
    }
    write_run_record(
        &a.out,
        "segment",
        &Rec {
            k: a.k,
            seed: a.seed,
            fit_images: n_images,
            fit_pixels: n_pixels,
            n_images: images.len(),
        },
    )?;
    println!("k={} inertia={:.6} after {} iterations", a.k, model.inertia, model.iterations_run);
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let model = KMeansModel::read_file(&a.kmeans)?;
    let images = a.source.load()?;
    let cell = images.first().map_or(43.0, |(_, r)| r.cell_size_m() as f64);
    let cfg = MetricConfig {
        connectivity: a.connectivity,
        threshold_cells: a.threshold_cells,
        cell_size_m: cell,
    };
    let rows = images
        .iter()
        .map(|(id, img)| {
            let m = compute_all(img, &model, &cfg)?;
            Ok(MetricsRow::new(id, Source::Target, &a.name, model.k, 0, &m, &cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    write_metrics_csv(&a.out, &rows)?;
    #[derive(Serialize)]
    struct Rec<'a> {
        kmeans: &'a Path,
        name: &'a str,
        metric: &'a MetricConfig,
    }
    write_run_record(
        dir,
        "metrics",
        &Rec {
            kmeans: &a.kmeans,
            name: &a.name,
            metric: &cfg,
        },
    )?;
    println!("wrote metrics of {} images to {}", rows.len(), a.out.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let targets: Vec<(String, RasterStack)> = match (&a.targets, &a.dataset) {
        (Some(dir), _) => read_raster_dir(dir)?.into_iter().collect(),
        (None, Some(ds)) => {
            let split = SplitAssignment::read_file(a.split.as_ref().expect("clap requires split"))?;
            dataset_imagery(ds, Some(&split))?
        }
        (None, None) => return Err(Error::InvalidInput("give --targets or --dataset with --split".into())),
    };
    let cell = targets.first().map_or(43.0, |(_, r)| r.cell_size_m() as f64);
    let cfg = a.eval.config(cell);
    let mut found = read_raster_dir(&a.generated)?;
    let images = targets.iter().map(|(id, _)| found.remove(id)).collect();
    let ev = evaluate(
        &targets,
        &[GeneratedSet {
            model_name: a.name.clone(),
            images,
        }],
        &cfg,
        &a.design_label,
    )?;
    std::fs::create_dir_all(&a.out)?;
    #[derive(Serialize)]
    struct Rec<'a> {
        targets: &'a Option<PathBuf>,
        dataset: &'a Option<PathBuf>,
        split: &'a Option<PathBuf>,
        generated: &'a Path,
        name: &'a str,
        design_label: &'a str,
        eval: &'a EvalConfig,
    }
    write_run_record(
        &a.out,
        "evaluate",
        &Rec {
            targets: &a.targets,
            dataset: &a.dataset,
            split: &a.split,
            generated: &a.generated,
            name: &a.name,
            design_label: &a.design_label,
            eval: &cfg,
        },
    )?;
    write_metrics_csv(a.out.join("metrics.csv"), &ev.rows)?;
    render_report(&ev.report, &a.out)?;
    if ev.report.warning_count() > 0 {
        eprintln!("warning: {} targets had no generated partner", ev.report.warning_count());
    }
    println!("wrote {}", a.out.join("report.csv").display());
    Ok(())
}

fn experiment(a: ExpArgs, two: bool) -> Result<()> {
    let m = DatasetManifest::load(&a.dataset)?;
    let cfg = ExperimentConfig {
        dataset: a.dataset.clone(),
        out: a.out.clone(),
        models: a.models.iter().map(|s| ModelSpec::parse(s)).collect::<Result<_>>()?,
        split_seed: a.eval.seed,
        train: a.train.config(a.eval.seed),
        eval: a.eval.config(m.info.cell_size_m as f64),
        ..ExperimentConfig::default()
    };
    let out = if two {
        run_experiment_two(&cfg)?
    } else {
        run_experiment_one(&cfg)?
    };
    for (label, msg) in &out.skipped {
        eprintln!("skipped design {label}: {msg}");
    }
    for r in &out.ndvi {
        println!(
            "{:<16} {:<10} ndvi bicor {}",
            r.split_design,
            r.model_name,
            landkit::stats::fmt_corr(r.bicor_mean)
        );
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let m = DatasetManifest::load(&a.dataset)?;
    let e = m
        .entry(&a.sample)
        .ok_or_else(|| Error::InvalidInput(format!("no sample {:?} in dataset", a.sample)))?;
    let conditions = RasterStack::read_file(m.root.join(&e.conditions_path))?;
    let fc;
    let ext;
    let generator: &dyn Generator = match (&a.model, &a.command) {
        (Some(dir), _) => {
            fc = TrainedFc::load(dir)?;
            &FcGenerator { model: &fc }
        }
        (None, Some(cmd)) if !cmd.is_empty() => {
            ext = ExternalCommand {
                name: "external".into(),
                program: cmd[0].clone(),
                args: cmd[1..].to_vec(),
                work_dir: a.out.join("work"),
            };
            &ext
        }
        _ => return Err(Error::InvalidInput("give --model or --command".into())),
    };
    let cfg = SweepConfig::new(a.d_temp.clone(), a.d_precip.clone());
    let res = counterfactual_sweep(generator, &a.sample, &conditions, &cfg)?;
    std::fs::create_dir_all(&a.out)?;
    res.write_png(a.out.join("mosaic.png"))?;
    res.write_table(a.out.join("sweep.csv"))?;
    #[derive(Serialize)]
    struct Rec<'a> {
        dataset: &'a Path,
        sample: &'a str,
        model: &'a Option<PathBuf>,
        command: &'a Option<Vec<String>>,
        temperature_channel: &'a str,
        precipitation_channel: &'a str,
        d_temp: &'a [f64],
        d_precip: &'a [f64],
    }
    write_run_record(
        &a.out,
        "sweep",
        &Rec {
            dataset: &a.dataset,
            sample: &a.sample,
            model: &a.model,
            command: &a.command,
            temperature_channel: &cfg.temperature_channel,
            precipitation_channel: &cfg.precipitation_channel,
            d_temp: &cfg.d_temp,
            d_precip: &cfg.d_precip,
        },
    )?;
    println!("wrote {}", a.out.join("mosaic.png").display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let r = CorrelationReport::read_csv(&a.input)?;
    render_report(&r, &a.out)?;
    #[derive(Serialize)]
    struct Rec<'a> {
        input: &'a Path,
    }
    write_run_record(&a.out, "report", &Rec { input: &a.input })?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Split(a) => split(a),
        Cmd::TrainFc(a) => train(a),
        Cmd::Predict(a) => predict(a),
        Cmd::Segment(a) => segment(a),
        Cmd::Metrics(a) => metrics(a),
        Cmd::Evaluate(a) => evaluate_cmd(a),
        Cmd::Exp1(a) => experiment(a, false),
        Cmd::Exp2(a) => experiment(a, true),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
