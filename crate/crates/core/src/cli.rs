//! Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{run_bench, BenchConfig, MIN_RUNS};
use crate::error::{Error, Result};
use crate::features::{build_feature_bundle, Matrix, DEFAULT_FRAMES};
use crate::io::{load_canonical, load_weights, parse_shrec, save_canonical, save_weights, CanonicalDataset, LabelMode};
use crate::model::{ModelConfig, Streams};
use crate::train::{evaluate, train_with_progress, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "ddnet", version, about = "Skeleton-based action recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write its weights and per-epoch history.
    Train(TrainArgs),
    /// Score saved weights on a dataset and write the confusion matrix.
    Eval(EvalArgs),
    /// Dump the feature streams of one sample as CSV.
    Features(FeaturesArgs),
    /// Measure inference throughput on synthetic input.
    Bench(BenchArgs),
    /// Convert a dataset distribution into canonical files.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Shrec14,
    Shrec28,
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// SHREC root directory, or a canonical dataset file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub dataset: DatasetKind,
    /// Canonical test split (SHREC provides its own).
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 64)]
    pub filters: usize,
    #[arg(long, default_value_t = 600)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Frames every sequence is resampled to.
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    pub frames: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr_max: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub lr_min: f64,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    /// Fraction of frames kept by subsampling augmentation; 1 disables it.
    #[arg(long, default_value_t = 0.9)]
    pub augment: f64,
    /// Comma-separated subset of jcd,slow,fast.
    #[arg(long, default_value = "jcd,slow,fast", value_parser = parse_streams)]
    pub streams: Streams,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub history: PathBuf,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Split to score; defaults to test when one exists.
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    /// Sample id, or a zero-based index when no id matches.
    #[arg(long)]
    pub sample: String,
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    pub frames: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 64)]
    pub filters: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = MIN_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Saved weights; seeded random weights otherwise.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceFormat {
    Shrec,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub from: SourceFormat,
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, value_parser = ["14", "28"], default_value = "14")]
    pub label_mode: String,
    /// Output directory; receives train.skel and test.skel.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_streams(s: &str) -> std::result::Result<Streams, String> {
    let mut streams = Streams { jcd: false, slow: false, fast: false };
    for part in s.split(',').map(str::trim) {
        match part {
            "jcd" => streams.jcd = true,
            "slow" => streams.slow = true,
            "fast" => streams.fast = true,
            other => return Err(format!("unknown stream `{other}` (expected jcd, slow or fast)")),
        }
    }
    if streams.count() == 0 {
        return Err("at least one stream is required".into());
    }
    Ok(streams)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Features(a) => cmd_features(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Convert(a) => cmd_convert(a),
    }
}

fn load_data(args: &DataArgs) -> Result<(CanonicalDataset, Option<CanonicalDataset>)> {
    let mode = match args.dataset {
        DatasetKind::Shrec14 => LabelMode::Fourteen,
        DatasetKind::Shrec28 => LabelMode::TwentyEight,
        DatasetKind::Canonical => {
            let train = load_canonical(&args.data)?;
            let test = args.test.as_ref().map(load_canonical).transpose()?;
            return Ok((train, test));
        }
    };
    if args.test.is_some() {
        return Err(Error::InvalidArgument("--test only applies to canonical datasets".into()));
    }
    let (train, test) = parse_shrec(&args.data, mode)?;
    Ok((train, Some(test)))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (train, test) = load_data(&a.data)?;
    let model_cfg = ModelConfig::new(train.num_joints(), train.coord_dim(), train.num_classes())
        .with_filters(a.filters)
        .with_frames(a.frames)
        .with_streams(a.streams);
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        lr_max: a.lr_max,
        lr_min: a.lr_min,
        plateau_patience: a.patience,
        augment_ratio: a.augment,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let quiet = a.quiet;
    let (model, history) = train_with_progress(&train, test.as_ref(), model_cfg, &cfg, |r| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  loss {:.4}  train {:.4}  val {:.4}  lr {:.2e}",
                r.epoch, r.train_loss, r.train_acc, r.val_acc, r.lr
            );
        }
    })?;
    save_weights(&model, &a.out)?;
    write_file(&a.history, history.to_csv())?;
    let (label, data) = match &test {
        Some(t) => ("test", t),
        None => ("train", &train),
    };
    let eval = evaluate(&model, data)?;
    if let Some(best) = history.best_epoch {
        println!("best epoch: {best}");
    }
    println!("{label} accuracy: {:.4}", eval.accuracy);
    Ok(())
}

fn pick_split(train: CanonicalDataset, test: Option<CanonicalDataset>, split: Split) -> Result<CanonicalDataset> {
    match (split, test) {
        (Split::Train, _) => Ok(train),
        (Split::Test, Some(t)) => Ok(t),
        (Split::Test, None) => Err(Error::InvalidArgument("no test split available".into())),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = load_weights(&a.weights)?;
    let (train, test) = load_data(&a.data)?;
    let split = a.split.unwrap_or(if test.is_some() { Split::Test } else { Split::Train });
    let data = pick_split(train, test, split)?;
    let eval = evaluate(&model, &data)?;
    println!("accuracy: {:.4}", eval.accuracy);
    if let Some(path) = &a.confusion {
        write_file(path, eval.confusion_csv(data.label_names()))?;
    }
    Ok(())
}

fn push_block(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "# {name},{},{}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(f32::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

/// CSV dump of one feature bundle: a `# sample` line, then one block per
/// stream headed by `# <stream>,<rows>,<cols>`. Values print in shortest
/// round-trip form.
pub fn features_csv(id: &str, label: &str, bundle: &crate::features::FeatureBundle) -> String {
    let mut out = format!("# sample,{id},{label}\n");
    push_block(&mut out, "jcd", &bundle.jcd);
    push_block(&mut out, "slow", &bundle.slow);
    push_block(&mut out, "fast", &bundle.fast);
    out
}

fn cmd_features(a: FeaturesArgs) -> Result<()> {
    let (train, test) = load_data(&a.data)?;
    let data = pick_split(train, test, a.split)?;
    let sample = data
        .find(&a.sample)
        .ok_or_else(|| Error::InvalidArgument(format!("sample `{}` not found", a.sample)))?;
    let bundle = build_feature_bundle(&sample.sequence, a.frames)?;
    let label = &data.label_names()[sample.label];
    write_file(&a.out, features_csv(&sample.id, label, &bundle))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let model = a.weights.as_ref().map(load_weights).transpose()?;
    let report = run_bench(&BenchConfig {
        filters: a.filters,
        batch: a.batch,
        iterations: a.iterations,
        threads: a.threads,
        warmup: a.warmup,
        runs: a.runs,
        seed: a.seed,
        model,
    })?;
    print!("{}", report.to_text());
    if let Some(path) = &a.json {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(path, json)?;
    }
    Ok(())
}

fn cmd_convert(a: ConvertArgs) -> Result<()> {
    let SourceFormat::Shrec = a.from;
    let mode = if a.label_mode == "28" { LabelMode::TwentyEight } else { LabelMode::Fourteen };
    let (train, test) = parse_shrec(&a.root, mode)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    save_canonical(&train, a.out.join("train.skel"))?;
    save_canonical(&test, a.out.join("test.skel"))?;
    println!("train: {} samples, test: {} samples, {} classes", train.len(), test.len(), train.num_classes());
    Ok(())
}
