//! `ngds` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (missing or malformed files, dimension mismatches), 3 numerical
//! degeneracy.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use ngds::dataio::{read_model, write_atomic, write_model};
use ngds::{
    classical_mds, fit, generate_synthetic, ingest_feature_modes, Dataset, DatasetManifest, FeatureReplacement,
    FisherStatus, Metrics, NModeFisher, PipelineConfig, Split, SynthSpec, TrainedModel,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ngds", version, about = "Tensor classification on product Grassmann manifolds")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset (tensors plus manifest.txt).
    Gen(GenArgs),
    /// Train a model and write it with its Fisher diagnostics.
    Fit(FitArgs),
    /// Classify a split with a saved model.
    Eval(ModelArgs),
    /// Pairwise weighted distances between samples in a model's representation.
    Dist(ModelArgs),
    /// Classical MDS coordinates of the pairwise distances.
    Mds(MdsArgs),
    /// Per-mode Fisher scores before and after the GDS search, without saving a model.
    Fisher(FitArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// key=value file (seed, classes, samples, dims, shared_dim, class_dim, noise, train_frac).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    classes: Option<usize>,
    /// Samples per class.
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated mode extents, e.g. 12,12,12.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    shared_dim: Option<usize>,
    #[arg(long)]
    class_dim: Option<usize>,
    /// Within-class noise level.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    train_frac: Option<f64>,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// train, test or all.
    #[arg(long)]
    split: Option<String>,
    /// Replace a mode's unfolding by precomputed features: MODE:ROWS:DIR
    /// (mode numbered from 1; one matrix per manifest entry, same file name).
    #[arg(long = "features", value_name = "MODE:ROWS:DIR")]
    features: Vec<String>,
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value pipeline configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// msm, gds, pgm, nmode-gds or nmode-wgds.
    #[arg(long)]
    method: Option<String>,
    /// Modes to use, numbered from 1 (e.g. 1,3), or "all".
    #[arg(long)]
    modes: Option<String>,
    /// Energy fraction for subspace dimensions.
    #[arg(long)]
    mu: Option<String>,
    /// Energy fraction for class subspaces in the GDS gram.
    #[arg(long)]
    class_mu: Option<String>,
    /// Fixed subspace dimension per used mode, or "auto".
    #[arg(long)]
    dims: Option<String>,
    /// Canonical angles per used mode, or "auto".
    #[arg(long)]
    angles: Option<String>,
    #[arg(long)]
    alpha_max: Option<String>,
    /// coordinate or exhaustive.
    #[arg(long)]
    search: Option<String>,
    /// nn or class-karcher.
    #[arg(long)]
    classifier: Option<String>,
    /// fisher or uniform.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MdsArgs {
    #[command(flatten)]
    inner: ModelArgs,
    /// Embedding dimension.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(ngds::Error),
}

impl From<ngds::Error> for CliError {
    fn from(e: ngds::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(ngds::Error::Config(_)) => 1,
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_matrix(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| num(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Output directory; every file is written atomically.
struct Out(PathBuf);

impl Out {
    fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(ngds::Error::from)?;
        Ok(Self(dir.to_path_buf()))
    }

    fn put(&self, name: &str, text: &str) -> CliResult<()> {
        write_atomic(&self.0.join(name), text.as_bytes())?;
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
        self.put(name, &(text + "\n"))
    }
}

#[derive(Serialize)]
struct FisherRow {
    stage: &'static str,
    /// Numbered from 1; `None` for the n-mode aggregate.
    mode: Option<usize>,
    between: f64,
    within: f64,
    score: f64,
    status: &'static str,
}

/// Mean canonical angle between class subspaces of one mode.
#[derive(Serialize)]
struct ClassAngles {
    mode: usize,
    before: f64,
    /// `None` when a class subspace has no component in the GDS.
    after: Option<f64>,
}

fn status_str(s: FisherStatus) -> &'static str {
    match s {
        FisherStatus::Finite => "finite",
        FisherStatus::Infinite => "infinite",
        FisherStatus::Indeterminate => "indeterminate",
    }
}

fn fisher_rows(stage: &'static str, modes: &[usize], f: &NModeFisher) -> Vec<FisherRow> {
    let mut rows: Vec<FisherRow> = f
        .per_mode
        .iter()
        .zip(modes)
        .map(|(r, &m)| FisherRow {
            stage,
            mode: Some(m + 1),
            between: r.between,
            within: r.within,
            score: r.score,
            status: status_str(r.status),
        })
        .collect();
    rows.push(FisherRow {
        stage,
        mode: None,
        between: f.between,
        within: f.within,
        score: f.score,
        status: status_str(f.status),
    });
    rows
}

fn fisher_csv(rows: &[FisherRow]) -> String {
    let mut s = String::from("stage,mode,between,within,score,status\n");
    for r in rows {
        let mode = r.mode.map_or("all".to_string(), |m| m.to_string());
        let _ = writeln!(s, "{},{mode},{},{},{},{}", r.stage, num(r.between), num(r.within), num(r.score), r.status);
    }
    s
}

#[derive(Serialize)]
struct MetricsJson {
    samples: usize,
    accuracy: f64,
    per_class_recall: Vec<Option<f64>>,
    mean_margin: f64,
    confusion: Vec<Vec<usize>>,
}

impl From<&Metrics> for MetricsJson {
    fn from(m: &Metrics) -> Self {
        Self {
            samples: m.predictions.len(),
            accuracy: m.accuracy,
            per_class_recall: m.per_class_recall.clone(),
            mean_margin: m.mean_margin,
            confusion: m.confusion.clone(),
        }
    }
}

#[derive(Serialize)]
struct MdsJson {
    k: usize,
    eigenvalues: Vec<f64>,
    negative_mass: f64,
    coords: Vec<Vec<f64>>,
}

/// Everything a run reports; absent parts are omitted from summary.json.
#[derive(Serialize, Default)]
struct ReportBundle {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fisher: Option<Vec<FisherRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gds_ranges: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class_angles: Option<Vec<ClassAngles>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distances: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mds: Option<MdsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthetic: Option<serde_json::Value>,
}

fn parse_list(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| CliError::Usage(format!("expected a comma-separated list, got `{s}`"))))
        .collect()
}

fn parse_split(s: Option<&str>, default: Option<Split>) -> CliResult<Option<Split>> {
    match s {
        None => Ok(default),
        Some("all") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| CliError::Usage(format!("unknown split `{v}`"))),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    let bytes = ngds::dataio::read_file(path)?;
    String::from_utf8(bytes).map_err(|_| CliError::Lib(ngds::Error::Manifest(format!("{} is not UTF-8", path.display()))))
}

impl ConfigArgs {
    fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut c = PipelineConfig::default();
        if let Some(path) = &self.config {
            c.apply_text(&read_text(path)?)?;
        }
        let flags = [
            ("method", &self.method),
            ("modes", &self.modes),
            ("mu", &self.mu),
            ("class_mu", &self.class_mu),
            ("dims", &self.dims),
            ("angles", &self.angles),
            ("alpha_max", &self.alpha_max),
            ("search", &self.search),
            ("classifier", &self.classifier),
            ("weights", &self.weights),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

struct Loaded {
    manifest: DatasetManifest,
    dataset: Dataset,
    paths: Vec<String>,
    split: Option<Split>,
}

impl DataArgs {
    fn load(&self, default_split: Option<Split>) -> CliResult<Loaded> {
        let split = parse_split(self.split.as_deref(), default_split)?;
        let manifest = DatasetManifest::load(&self.manifest)?;
        let mut reps = Vec::new();
        for spec in &self.features {
            let mut it = spec.splitn(3, ':');
            let bad = || CliError::Usage(format!("--features expects MODE:ROWS:DIR, got `{spec}`"));
            let mode: usize = it.next().and_then(|v| v.parse().ok()).filter(|&m| m >= 1).ok_or_else(bad)?;
            let rows: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let dir = it.next().ok_or_else(bad)?;
            reps.push(FeatureReplacement::from_dir(mode - 1, rows, Path::new(dir), &manifest));
        }
        let dataset = ingest_feature_modes(&manifest, split, &reps)?;
        if dataset.is_empty() {
            return Err(CliError::Lib(ngds::Error::Manifest(format!(
                "{} has no {} entries",
                self.manifest.display(),
                split.map_or("", |s| s.as_str())
            ))));
        }
        let paths = manifest
            .indices(split)
            .into_iter()
            .map(|i| manifest.entries[i].path.display().to_string())
            .collect();
        Ok(Loaded {
            manifest,
            dataset,
            paths,
            split,
        })
    }

    fn inputs(&self, split: Option<Split>, model: Option<&Path>) -> serde_json::Value {
        serde_json::json!({
            "manifest": self.manifest.display().to_string(),
            "split": split.map_or("all", |s| s.as_str()),
            "features": self.features,
            "model": model.map(|m| m.display().to_string()),
        })
    }
}

fn gen_spec(args: &GenArgs) -> CliResult<SynthSpec> {
    let mut spec = SynthSpec::default();
    let mut set = |key: &str, value: &str| -> CliResult<()> {
        let bad = || CliError::Usage(format!("invalid value `{value}` for `{key}`"));
        match key {
            "seed" => spec.seed = value.parse().map_err(|_| bad())?,
            "classes" => spec.classes = value.parse().map_err(|_| bad())?,
            "samples" => spec.samples_per_class = value.parse().map_err(|_| bad())?,
            "dims" => spec.dims = parse_list(value)?,
            "shared_dim" => spec.shared_dim = value.parse().map_err(|_| bad())?,
            "class_dim" => spec.class_dim = value.parse().map_err(|_| bad())?,
            "noise" => spec.within_noise = value.parse().map_err(|_| bad())?,
            "train_frac" => spec.train_frac = value.parse().map_err(|_| bad())?,
            _ => return Err(CliError::Usage(format!("unknown generator key `{key}`"))),
        }
        Ok(())
    };
    if let Some(path) = &args.config {
        for line in read_text(path)?.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{line}`")))?;
            set(k.trim(), v.trim())?;
        }
    }
    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("classes", args.classes.map(|v| v.to_string())),
        ("samples", args.samples.map(|v| v.to_string())),
        ("dims", args.dims.clone()),
        ("shared_dim", args.shared_dim.map(|v| v.to_string())),
        ("class_dim", args.class_dim.map(|v| v.to_string())),
        ("noise", args.noise.map(|v| format!("{v:?}"))),
        ("train_frac", args.train_frac.map(|v| format!("{v:?}"))),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            set(k, &v)?;
        }
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn spec_text(s: &SynthSpec) -> String {
    let dims: Vec<String> = s.dims.iter().map(|d| d.to_string()).collect();
    format!(
        "seed={}\nclasses={}\nsamples={}\ndims={}\nshared_dim={}\nclass_dim={}\nnoise={:?}\ntrain_frac={:?}\n",
        s.seed,
        s.classes,
        s.samples_per_class,
        dims.join(","),
        s.shared_dim,
        s.class_dim,
        s.within_noise,
        s.train_frac
    )
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let spec = gen_spec(args)?;
    let data = generate_synthetic(&spec)?;
    let out = Out::new(&args.out)?;
    let manifest = data.write(&out.0)?;
    out.put("gen.txt", &spec_text(&spec))?;
    out.json(
        "summary.json",
        &ReportBundle {
            command: "gen",
            config: Some(spec_text(&spec)),
            class_names: Some(manifest.names()),
            synthetic: Some(serde_json::json!({
                "samples": manifest.total(),
                "train": manifest.indices(Some(Split::Train)).len(),
                "test": manifest.indices(Some(Split::Test)).len(),
            })),
            ..Default::default()
        },
    )?;
    log::info!("wrote {} tensors to {}", manifest.total(), args.out.display());
    Ok(())
}

fn weights_csv(model: &TrainedModel) -> String {
    let mut s = String::from("mode,weight\n");
    for (m, w) in model.modes().iter().zip(&model.weights.weights) {
        let _ = writeln!(s, "{},{}", m + 1, num(*w));
    }
    s
}

fn trace_csv(model: &TrainedModel) -> String {
    let mut s = String::from("round,mode,ranges,score\n");
    for step in &model.search_trace {
        let ranges: Vec<String> = step.ranges.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            step.round + 1,
            model.modes()[step.mode_pos] + 1,
            ranges.join(";"),
            step.score.map_or("infeasible".to_string(), num)
        );
    }
    s
}

fn train_report(command: &'static str, args: &FitArgs) -> CliResult<(TrainedModel, ReportBundle)> {
    let config = args.config.resolve()?;
    let data = args.data.load(Some(Split::Train))?;
    log::info!("fitting {} on {} samples", config.method.as_str(), data.dataset.len());
    let mut dataset = data.dataset;
    dataset.class_names = data.manifest.names();
    let model = fit(&dataset, &config)?;
    let mut fisher = fisher_rows("raw", model.modes(), &model.fisher_raw);
    if model.gds.is_some() {
        fisher.extend(fisher_rows("gds", model.modes(), &model.fisher));
    }
    let bundle = ReportBundle {
        command,
        inputs: Some(args.data.inputs(data.split, None)),
        config: Some(config.to_text()),
        class_names: Some(model.class_names.clone()),
        fisher: Some(fisher),
        weights: Some(model.weights.weights.clone()),
        gds_ranges: model.gds.as_ref().map(|g| g.iter().map(|b| (b.alpha, b.beta)).collect()),
        class_angles: model.class_angles.as_ref().map(|a| {
            a.iter()
                .zip(model.modes())
                .map(|(&(before, after), m)| ClassAngles {
                    mode: m + 1,
                    before,
                    after: after.is_finite().then_some(after),
                })
                .collect()
        }),
        ..Default::default()
    };
    Ok((model, bundle))
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let (model, bundle) = train_report("fit", args)?;
    let out = Out::new(&args.out)?;
    write_model(&out.0.join("model.nmm"), &model)?;
    out.put("config.txt", &model.config.to_text())?;
    out.put("fisher.csv", &fisher_csv(bundle.fisher.as_deref().unwrap_or_default()))?;
    out.put("weights.csv", &weights_csv(&model))?;
    out.put("trace.csv", &trace_csv(&model))?;
    out.json("summary.json", &bundle)
}

fn cmd_fisher(args: &FitArgs) -> CliResult<()> {
    let (model, bundle) = train_report("fisher", args)?;
    let out = Out::new(&args.out)?;
    out.put("config.txt", &model.config.to_text())?;
    out.put("fisher.csv", &fisher_csv(bundle.fisher.as_deref().unwrap_or_default()))?;
    out.put("weights.csv", &weights_csv(&model))?;
    out.json("summary.json", &bundle)
}

fn model_bundle(command: &'static str, args: &ModelArgs, model: &TrainedModel, split: Option<Split>) -> ReportBundle {
    ReportBundle {
        command,
        inputs: Some(args.data.inputs(split, Some(&args.model))),
        config: Some(model.config.to_text()),
        class_names: Some(model.class_names.clone()),
        weights: Some(model.weights.weights.clone()),
        ..Default::default()
    }
}

fn cmd_eval(args: &ModelArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let data = args.data.load(Some(Split::Test))?;
    let metrics = model.evaluate(&data.dataset)?;
    let out = Out::new(&args.out)?;

    let mut pred = String::from("index,path,label,predicted,distance,nearest\n");
    for (i, (c, path)) in metrics.predictions.iter().zip(&data.paths).enumerate() {
        let nearest = c.nearest.map_or(String::new(), |n| n.to_string());
        let _ = writeln!(pred, "{i},{path},{},{},{},{nearest}", data.dataset.labels[i], c.label, num(c.distance));
    }
    out.put("predictions.csv", &pred)?;
    let mut conf = String::from("true\\predicted");
    for j in 0..model.class_count() {
        let _ = write!(conf, ",{j}");
    }
    conf.push('\n');
    for (i, row) in metrics.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(conf, "{i},{}", cells.join(","));
    }
    out.put("confusion.csv", &conf)?;
    out.put("config.txt", &model.config.to_text())?;
    println!("accuracy {}", metrics.accuracy);
    let mut bundle = model_bundle("eval", args, &model, data.split);
    bundle.metrics = Some(MetricsJson::from(&metrics));
    bundle.fisher = Some(fisher_rows("train", model.modes(), &model.fisher));
    out.json("summary.json", &bundle)
}

fn distances(args: &ModelArgs) -> CliResult<(TrainedModel, Loaded, DMatrix<f64>)> {
    let model = read_model(&args.model)?;
    let data = args.data.load(None)?;
    let points = data
        .dataset
        .samples
        .iter()
        .map(|s| model.transform(s))
        .collect::<ngds::Result<Vec<_>>>()?;
    let d = model.pairwise_distances(&points)?;
    Ok((model, data, d))
}

fn labels_csv(data: &Loaded) -> String {
    let mut s = String::from("index,path,label\n");
    for (i, (p, l)) in data.paths.iter().zip(&data.dataset.labels).enumerate() {
        let _ = writeln!(s, "{i},{p},{l}");
    }
    s
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn cmd_dist(args: &ModelArgs) -> CliResult<()> {
    let (model, data, d) = distances(args)?;
    let out = Out::new(&args.out)?;
    out.put("distances.csv", &csv_matrix(&d))?;
    out.put("labels.csv", &labels_csv(&data))?;
    out.put("config.txt", &model.config.to_text())?;
    let mut bundle = model_bundle("dist", args, &model, data.split);
    bundle.distances = Some(rows(&d));
    out.json("summary.json", &bundle)
}

fn cmd_mds(args: &MdsArgs) -> CliResult<()> {
    let (model, data, d) = distances(&args.inner)?;
    let mds = classical_mds(&d, args.k)?;
    let out = Out::new(&args.inner.out)?;
    let mut s = String::from("index,label");
    for j in 0..args.k {
        let _ = write!(s, ",x{}", j + 1);
    }
    s.push('\n');
    for i in 0..mds.coords.nrows() {
        let coords: Vec<String> = mds.coords.row(i).iter().map(|&v| num(v)).collect();
        let _ = writeln!(s, "{i},{},{}", data.dataset.labels[i], coords.join(","));
    }
    out.put("mds.csv", &s)?;
    out.put("labels.csv", &labels_csv(&data))?;
    out.put("config.txt", &model.config.to_text())?;
    let mut bundle = model_bundle("mds", &args.inner, &model, data.split);
    bundle.mds = Some(MdsJson {
        k: args.k,
        eigenvalues: mds.eigenvalues.iter().copied().collect(),
        negative_mass: mds.negative_mass,
        coords: rows(&mds.coords),
    });
    out.json("summary.json", &bundle)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Mds(a) => cmd_mds(a),
        Command::Fisher(a) => cmd_fisher(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
