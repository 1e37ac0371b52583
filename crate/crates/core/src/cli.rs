//! The `clan` command line.
//!
//! Every option can also come from a flat `key = value` file passed with
//! `--config`; keys are option names with `-` or `_`, and a flag given on the
//! command line wins over the file. Exit codes: 0 success, 1 usage or
//! configuration error, 2 data or contract error, 3 numeric divergence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::augmentation::AugmentConfig;
use crate::error::{ClanError, Result};
use crate::eval::{self, lycos, BenchConfig, EvalReport, SynthConfig};
use crate::inference::{compute_centroid, score, CentroidCache, Partition};
use crate::loss::{LossConfig, LossKind};
use crate::model::{Checkpoint, MlpConfig};
use crate::numerics::Metric;
use crate::pipeline::{
    apply_scaler, benign_only, fit_scaler, load_csv, stratified_split, write_csv, FlowDataset, LoadOptions,
    Scaler,
};
use crate::trainer::{
    finetune, predict, pretrain, stratified_subsample, write_loss_history, ClassifierCheckpoint, ClassifierHead,
    FinetuneConfig, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "clan", version, about = "Contrastive benign-traffic encoder and centroid intrusion scorer")]
pub struct Cli {
    /// Flat key=value file supplying defaults for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic flow CSV.
    Synth(SynthArgs),
    /// Split a labelled CSV into stratified train and test CSVs.
    Split(SplitArgs),
    /// Pretrain the encoder on the benign rows of a CSV.
    Pretrain(PretrainArgs),
    /// Cache the benign latent centroid.
    Centroid(CentroidArgs),
    /// Score every row of a CSV against the cached centroid.
    Score(ScoreArgs),
    /// Per-class AUROC report from a score CSV.
    EvalBinary(EvalArgs),
    /// Fine-tune a classifier on a few labelled samples per class.
    Finetune(FinetuneArgs),
    /// Time centroid scoring against nearest-neighbour scoring.
    BenchInference(BenchArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Label column name [default: label]
    #[arg(long)]
    pub label_column: Option<String>,
    /// Label value of benign rows [default: benign]
    #[arg(long)]
    pub benign_label: Option<String>,
    /// Comma-separated columns to ignore
    #[arg(long)]
    pub drop_columns: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub benign: Option<usize>,
    #[arg(long)]
    pub malicious: Option<usize>,
    /// [default: 16]
    #[arg(long)]
    pub features: Option<usize>,
    /// Number of attack classes [default: 3]
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: synthetic.csv]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub train_output: Option<PathBuf>,
    #[arg(long)]
    pub test_output: Option<PathBuf>,
    /// [default: 0.5]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Comma-separated classes placed only in the test split
    #[arg(long)]
    pub holdout: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Checkpoint path [default: encoder.clan]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Loss history CSV [default: checkpoint path with .loss.csv]
    #[arg(long)]
    pub loss_history: Option<PathBuf>,
    /// [default: 200]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Peak learning rate [default: 1e-3]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 1e-4]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// [default: 0.1]
    #[arg(long)]
    pub warmup_fraction: Option<f64>,
    /// Seeds initialization, batch order and augmentation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: 256]
    #[arg(long)]
    pub hidden_width: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    /// [default: 32]
    #[arg(long)]
    pub latent_width: Option<usize>,
    /// clan or ntxent [default: clan]
    #[arg(long)]
    pub loss: Option<String>,
    /// cosine or squared_euclidean [default: cosine]
    #[arg(long)]
    pub metric: Option<String>,
    /// [default: 1.0]
    #[arg(long)]
    pub margin: Option<f64>,
    /// [default: 1.0]
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Per-entry resampling probability [default: 0.5]
    #[arg(long)]
    pub p_resample: Option<f64>,
    /// Resampled entries are uniform on [-b, b] [default: 1.0]
    #[arg(long)]
    pub aug_bound: Option<f32>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct CentroidArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// CSV whose benign rows define the centroid
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// [default: centroid.clan]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Benign distance quantile mapped to probability 0.5 [default: 0.99]
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Fixed partition constant Z, overriding --quantile
    #[arg(long)]
    pub partition: Option<f64>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub centroid: Option<PathBuf>,
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// [default: scores.csv]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Expected metric; must agree with checkpoint and centroid
    #[arg(long)]
    pub metric: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score CSV written by `score`
    #[arg(long, short)]
    pub scores: Option<PathBuf>,
    /// Report CSV [default: report.csv]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Row order of the report: input or lycos [default: input]
    #[arg(long)]
    pub order: Option<String>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Classifier checkpoint of the first run [default: classifier.clan]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// [default: 8]
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 1e-6]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 0.0]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Runs with seeds 0..runs [default: 10]
    #[arg(long)]
    pub runs: Option<u64>,
    /// [default: 0.5]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated cache sizes [default: 1000,10000,100000]
    #[arg(long)]
    pub sizes: Option<String>,
    /// [default: 32]
    #[arg(long)]
    pub latent_width: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    pub queries: Option<usize>,
    /// [default: cosine]
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional timing CSV
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Flag values layered over an optional config file.
struct Settings {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_").to_ascii_lowercase()
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    ClanError::Config(format!("{}:{}: expected key = value", path.display(), n + 1))
                })?;
                file.insert(normalize_key(k), v.trim().to_string());
            }
        }
        Ok(Settings { file, used: RefCell::new(BTreeSet::new()) })
    }

    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let key = normalize_key(key);
        self.used.borrow_mut().insert(key.clone());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(&key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| ClanError::Config(format!("config key `{key}` = `{v}`: {e}"))),
        }
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| ClanError::Config(format!("missing required option --{}", key.replace('_', "-"))))
    }

    /// Config keys never consulted by the command are rejected.
    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.file.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ClanError::Config(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    fn load_options(&self, data: DataArgs) -> Result<LoadOptions> {
        let mut opts = LoadOptions::new(
            self.get(data.label_column, "label_column", lycos::LABEL_COLUMN.to_string())?,
            self.get(data.benign_label, "benign_label", lycos::BENIGN_LABEL.to_string())?,
        );
        if let Some(cols) = self.opt(data.drop_columns, "drop_columns")? {
            opts.drop_columns = split_list(&cols);
        }
        Ok(opts)
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn load(path: &Path, opts: &LoadOptions) -> Result<FlowDataset> {
    let (ds, report) = load_csv(path, opts)?;
    if report.dropped() > 0 {
        warn!("{}: {} rows rejected", path.display(), report.dropped());
    }
    info!("{}: {} rows, {} features, {} classes", path.display(), ds.len(), ds.n_features(), ds.n_classes());
    Ok(ds)
}

/// Maps an error to its exit code.
pub fn exit_code(err: &ClanError) -> i32 {
    match err {
        ClanError::Config(_) => EXIT_USAGE,
        ClanError::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => synth(&s, a),
        Command::Split(a) => split(&s, a),
        Command::Pretrain(a) => pretrain_cmd(&s, a),
        Command::Centroid(a) => centroid(&s, a),
        Command::Score(a) => score_cmd(&s, a),
        Command::EvalBinary(a) => eval_binary(&s, a),
        Command::Finetune(a) => finetune_cmd(&s, a),
        Command::BenchInference(a) => bench(&s, a),
    }
}

fn synth(s: &Settings, a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_benign: s.get(a.benign, "benign", 1000)?,
        n_malicious: s.get(a.malicious, "malicious", 200)?,
        n_features: s.get(a.features, "features", 16)?,
        n_attack_classes: s.get(a.classes, "classes", 3)?,
        seed: s.get(a.seed, "seed", 0)?,
    };
    let output = s.get(a.output, "output", PathBuf::from("synthetic.csv"))?;
    s.finish()?;
    let data = eval::generate_synthetic_with(&config)?.dataset;
    write_csv(&data, &output, lycos::LABEL_COLUMN)?;
    println!("wrote {} rows to {}", data.len(), output.display());
    Ok(())
}

fn split(s: &Settings, a: SplitArgs) -> Result<()> {
    let input: PathBuf = s.require(a.input, "input")?;
    let train_out = s.get(a.train_output, "train_output", PathBuf::from("train.csv"))?;
    let test_out = s.get(a.test_output, "test_output", PathBuf::from("test.csv"))?;
    let fraction = s.get(a.train_fraction, "train_fraction", 0.5)?;
    let holdout = split_list(&s.get(a.holdout, "holdout", String::new())?);
    let seed = s.get(a.seed, "seed", 0)?;
    let opts = s.load_options(a.data)?;
    s.finish()?;

    let ds = load(&input, &opts)?;
    let holdout: Vec<&str> = holdout.iter().map(String::as_str).collect();
    let (train, test) = stratified_split(&ds, fraction, &holdout, seed)?;
    write_csv(&train, &train_out, &opts.label_column)?;
    write_csv(&test, &test_out, &opts.label_column)?;
    println!("train {} rows -> {}; test {} rows -> {}", train.len(), train_out.display(), test.len(), test_out.display());
    Ok(())
}

fn pretrain_cmd(s: &Settings, a: PretrainArgs) -> Result<()> {
    let input: PathBuf = s.require(a.input, "input")?;
    let output = s.get(a.output, "output", PathBuf::from("encoder.clan"))?;
    let history_path = s.get(a.loss_history, "loss_history", output.with_extension("loss.csv"))?;
    let td = TrainConfig::default();
    let seed = s.get(a.seed, "seed", 0)?;
    let train = TrainConfig {
        epochs: s.get(a.epochs, "epochs", td.epochs)?,
        batch_size: s.get(a.batch_size, "batch_size", td.batch_size)?,
        base_lr: s.get(a.lr, "lr", td.base_lr)?,
        weight_decay: s.get(a.weight_decay, "weight_decay", td.weight_decay)?,
        warmup_fraction: s.get(a.warmup_fraction, "warmup_fraction", td.warmup_fraction)?,
        seed,
        loss: s.get::<String>(a.loss, "loss", td.loss.to_string())?.parse::<LossKind>()?,
    };
    let ld = LossConfig::default();
    let loss = LossConfig {
        metric: s.get::<String>(a.metric, "metric", ld.metric.to_string())?.parse::<Metric>()?,
        margin: s.get(a.margin, "margin", ld.margin)?,
        temperature: s.get(a.temperature, "temperature", ld.temperature)?,
    };
    let ad = AugmentConfig::default();
    let augment = AugmentConfig {
        p_resample: s.get(a.p_resample, "p_resample", ad.p_resample)?,
        b: s.get(a.aug_bound, "aug_bound", ad.b)?,
        seed,
    };
    let md = MlpConfig::with_defaults(0);
    let hidden_width = s.get(a.hidden_width, "hidden_width", md.hidden_width)?;
    let hidden_layers = s.get(a.hidden_layers, "hidden_layers", md.hidden_layers)?;
    let latent_width = s.get(a.latent_width, "latent_width", md.latent_width)?;
    let opts = s.load_options(a.data)?;
    s.finish()?;

    let ds = load(&input, &opts)?;
    let benign = benign_only(&ds);
    if benign.is_empty() {
        return Err(ClanError::Contract(format!("{} has no benign rows", input.display())));
    }
    let scaler = fit_scaler(&benign.features)?;
    let benign = benign.scaled(&scaler)?;
    let mlp = MlpConfig { input_width: ds.n_features(), hidden_width, hidden_layers, latent_width, seed };
    info!("pretraining on {} benign rows for {} epochs ({})", benign.len(), train.epochs, train.loss);
    let out = pretrain(&benign, &mlp, &train, &augment, &loss)?;
    Checkpoint { config: mlp, metric: loss.metric, params: out.params, scaler: Some(scaler) }.save(&output)?;
    write_loss_history(&out.history, &history_path)?;
    if let Some(last) = out.history.last() {
        println!("final epoch loss {:.6}", last.mean_loss);
    }
    println!("wrote {} and {}", output.display(), history_path.display());
    Ok(())
}

fn centroid(s: &Settings, a: CentroidArgs) -> Result<()> {
    let checkpoint: PathBuf = s.require(a.checkpoint, "checkpoint")?;
    let input: PathBuf = s.require(a.input, "input")?;
    let output = s.get(a.output, "output", PathBuf::from("centroid.clan"))?;
    let quantile = s.get(a.quantile, "quantile", crate::inference::DEFAULT_CALIBRATION_QUANTILE)?;
    let partition = match s.opt(a.partition, "partition")? {
        Some(z) => Partition::Fixed(z),
        None => Partition::Quantile(quantile),
    };
    let opts = s.load_options(a.data)?;
    s.finish()?;

    let ckpt = Checkpoint::load(&checkpoint)?;
    let benign = benign_only(&load(&input, &opts)?);
    let scaler = match ckpt.scaler {
        Some(sc) => sc,
        None => fit_scaler(&benign.features)?,
    };
    let x = apply_scaler(&scaler, &benign.features)?;
    let c = compute_centroid(&ckpt.params, &x, ckpt.metric, partition)?;
    println!("centroid over {} benign rows, metric {}, Z = {:.6}", benign.len(), c.metric, c.partition);
    CentroidCache { centroid: c, scaler: Some(scaler) }.save(&output)?;
    println!("wrote {}", output.display());
    Ok(())
}

/// Score CSV columns, in order.
pub const SCORE_COLUMNS: [&str; 6] = ["row", "distance", "prob_benign", "predicted_label", "label", "class"];

fn score_cmd(s: &Settings, a: ScoreArgs) -> Result<()> {
    let checkpoint: PathBuf = s.require(a.checkpoint, "checkpoint")?;
    let centroid: PathBuf = s.require(a.centroid, "centroid")?;
    let input: PathBuf = s.require(a.input, "input")?;
    let output = s.get(a.output, "output", PathBuf::from("scores.csv"))?;
    let metric = s.opt::<String>(a.metric, "metric")?.map(|m| m.parse::<Metric>()).transpose()?;
    let opts = s.load_options(a.data)?;
    s.finish()?;

    let ckpt = Checkpoint::load(&checkpoint)?;
    let cache = CentroidCache::load(&centroid)?;
    let metric = metric.unwrap_or(ckpt.metric);
    if metric != ckpt.metric {
        return Err(ClanError::Contract(format!(
            "requested metric {metric} but the encoder was trained with {}",
            ckpt.metric
        )));
    }
    let ds = load(&input, &opts)?;
    let scaler: Option<&Scaler> = cache.scaler.as_ref().or(ckpt.scaler.as_ref());
    let x = match scaler {
        Some(sc) => apply_scaler(sc, &ds.features)?,
        None => ds.features.clone(),
    };
    let records = score(&ckpt.params, &cache.centroid, metric, &x)?;

    let mut w = csv::Writer::from_path(&output)?;
    w.write_record(SCORE_COLUMNS)?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.distance.to_string(),
            r.prob_benign.to_string(),
            r.predicted_label.to_string(),
            ds.labels[i].to_string(),
            ds.class_names[ds.labels[i]].clone(),
        ])?;
    }
    w.flush()?;
    let flagged = records.iter().filter(|r| r.predicted_label == 1).count();
    println!("scored {} rows ({flagged} flagged malicious) -> {}", records.len(), output.display());
    Ok(())
}

/// Distances, labels, class names and predicted labels from a score CSV.
pub fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<usize>, Vec<String>, Vec<u8>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ClanError::Contract(format!("{}: missing column `{name}`", path.display())))
    };
    let (ci, li, ni, pi) = (col("distance")?, col("label")?, col("class")?, col("predicted_label")?);
    let bad = |line: usize, what: &str| ClanError::Contract(format!("{}:{line}: bad {what}", path.display()));
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    let (mut scores, mut labels, mut preds) = (Vec::new(), Vec::new(), Vec::new());
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let d: f64 = rec.get(ci).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad(line, "distance"))?;
        let l: usize = rec.get(li).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad(line, "label"))?;
        let p: u8 = rec.get(pi).and_then(|v| v.trim().parse().ok()).ok_or_else(|| bad(line, "predicted_label"))?;
        names.entry(l).or_insert_with(|| rec.get(ni).unwrap_or_default().to_string());
        scores.push(d);
        labels.push(l);
        preds.push(p);
    }
    if scores.is_empty() {
        return Err(ClanError::EmptyFile { path: path.to_path_buf() });
    }
    let n_classes = names.keys().next_back().map_or(0, |&k| k + 1);
    let class_names = (0..n_classes).map(|c| names.get(&c).cloned().unwrap_or_else(|| format!("class_{c}"))).collect();
    Ok((scores, labels, class_names, preds))
}

fn eval_binary(s: &Settings, a: EvalArgs) -> Result<()> {
    let scores_path: PathBuf = s.require(a.scores, "scores")?;
    let output = s.get(a.output, "output", PathBuf::from("report.csv"))?;
    let order = s.get(a.order, "order", "input".to_string())?;
    s.finish()?;

    let (scores, labels, class_names, preds) = read_scores(&scores_path)?;
    let mut report = eval::per_class_auroc(&labels, &class_names, &scores)?;
    let truth: Vec<usize> = labels.iter().map(|&l| usize::from(l != 0)).collect();
    let preds: Vec<usize> = preds.iter().map(|&p| usize::from(p)).collect();
    report.macro_f1 = Some(eval::macro_f1(&preds, &truth, 2)?);
    let report: EvalReport = match order.as_str() {
        "input" => report,
        "lycos" => report.ordered_by(&lycos::REPORT_ORDER),
        other => return Err(ClanError::Config(format!("unknown report order `{other}`"))),
    };
    report.write_csv(&output)?;
    println!("{report}");
    println!("mean AUROC {:.6}", report.mean_auroc);
    println!("wrote {}", output.display());
    Ok(())
}

fn finetune_cmd(s: &Settings, a: FinetuneArgs) -> Result<()> {
    let checkpoint: PathBuf = s.require(a.checkpoint, "checkpoint")?;
    let input: PathBuf = s.require(a.input, "input")?;
    let output = s.get(a.output, "output", PathBuf::from("classifier.clan"))?;
    let fd = FinetuneConfig::default();
    let runs = s.get(a.runs, "runs", fd.seeds.len() as u64)?;
    let config = FinetuneConfig {
        epochs: s.get(a.epochs, "epochs", fd.epochs)?,
        lr: s.get(a.lr, "lr", fd.lr)?,
        batch_size: s.get(a.batch_size, "batch_size", fd.batch_size)?,
        samples_per_class: s.get(a.samples_per_class, "samples_per_class", fd.samples_per_class)?,
        weight_decay: s.get(a.weight_decay, "weight_decay", fd.weight_decay)?,
        seeds: (0..runs).collect(),
    };
    let fraction = s.get(a.train_fraction, "train_fraction", 0.5)?;
    let split_seed = s.get(a.split_seed, "split_seed", 0)?;
    let opts = s.load_options(a.data)?;
    s.finish()?;
    config.validate()?;

    let ckpt = Checkpoint::load(&checkpoint)?;
    let ds = load(&input, &opts)?;
    let (train, test) = stratified_split(&ds, fraction, &[], split_seed)?;
    let scaler = match &ckpt.scaler {
        Some(sc) => sc.clone(),
        None => fit_scaler(&benign_only(&train).features)?,
    };
    let (train, test) = (train.scaled(&scaler)?, test.scaled(&scaler)?);

    let mut f1s = Vec::with_capacity(config.seeds.len());
    for (i, &seed) in config.seeds.iter().enumerate() {
        let subset = stratified_subsample(&train, config.samples_per_class, seed)?;
        let head = ClassifierHead::zeros(ckpt.params.latent_width(), ds.n_classes());
        let out = finetune(ckpt.params.clone(), head, &subset, &config, seed)?;
        let f1 = eval::macro_f1(&predict(&out.params, &out.head, &test.features)?, &test.labels, ds.n_classes())?;
        println!("seed {seed}: macro-F1 {f1:.6}");
        f1s.push(f1);
        if i == 0 {
            ClassifierCheckpoint {
                config: ckpt.config,
                metric: ckpt.metric,
                params: out.params,
                head: out.head,
                class_names: ds.class_names.clone(),
            }
            .save(&output)?;
        }
    }
    let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
    println!("mean macro-F1 over {} runs at {} samples/class: {mean:.6}", f1s.len(), config.samples_per_class);
    println!("wrote {}", output.display());
    Ok(())
}

fn bench(s: &Settings, a: BenchArgs) -> Result<()> {
    let d = BenchConfig::default();
    let sizes = match s.opt(a.sizes, "sizes")? {
        Some(list) => split_list(&list)
            .iter()
            .map(|v| v.parse::<usize>().map_err(|e| ClanError::Config(format!("size `{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?,
        None => d.train_sizes.clone(),
    };
    let config = BenchConfig {
        train_sizes: sizes,
        latent_width: s.get(a.latent_width, "latent_width", d.latent_width)?,
        queries: s.get(a.queries, "queries", d.queries)?,
        metric: s.get::<String>(a.metric, "metric", d.metric.to_string())?.parse()?,
        seed: s.get(a.seed, "seed", d.seed)?,
        min_trial_time: Duration::from_millis(20),
        trials: d.trials,
    };
    let output = s.opt(a.output, "output")?;
    s.finish()?;
    let report = eval::bench_inference(&config)?;
    println!("{report}");
    if let Some(path) = output {
        std::fs::write(&path, report.to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
