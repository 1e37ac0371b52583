//! Benign-only contrastive pretraining and supervised low-shot fine-tuning.

use std::io::Write;
use std::path::Path;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augmentation::{augment, AugmentConfig};
use crate::error::{ClanError, Result};
use crate::eval::macro_f1;
use crate::format::{FileKind, Reader, Writer};
use crate::inference::encode_all;
use crate::loss::{LossConfig, LossKind};
use crate::model::checkpoint::{read_encoder, write_encoder};
use crate::model::{backward, forward, init, Linear, MlpConfig, MlpParams};
use crate::numerics::{adamw_step, matmul_nt, matmul_tn, AdamWState, Matrix, Metric, ScheduleConfig};
use crate::pipeline::{batch_indices, FlowDataset, BENIGN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub weight_decay: f64,
    /// Fraction of all optimizer steps spent in linear warm-up.
    pub warmup_fraction: f64,
    /// Seeds the batch order.
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 256,
            base_lr: 1e-3,
            weight_decay: 1e-4,
            warmup_fraction: 0.1,
            seed: 0,
            loss: LossKind::Clan,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ClanError::Config("batch size must be >= 1".into()));
        }
        if !(self.base_lr > 0.0) {
            return Err(ClanError::Config(format!("base lr {} must be positive", self.base_lr)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(ClanError::Config(format!("weight decay {} must be >= 0", self.weight_decay)));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return Err(ClanError::Config(format!(
                "warm-up fraction {} outside [0, 1]",
                self.warmup_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Learning rate of the first step of the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct PretrainOutput {
    pub params: MlpParams,
    pub history: Vec<EpochStats>,
}

/// Trains the encoder on benign rows (already scaled).
///
/// Each step augments the batch, encodes both views, evaluates the selected
/// loss, backpropagates through both views and applies AdamW with the
/// warm-up cosine learning rate. The augmentation stream position is the
/// global step index, so the run is reproducible from its seeds.
pub fn pretrain(
    benign_train: &FlowDataset,
    mlp_config: &MlpConfig,
    train_config: &TrainConfig,
    augment_config: &AugmentConfig,
    loss_config: &LossConfig,
) -> Result<PretrainOutput> {
    mlp_config.validate()?;
    train_config.validate()?;
    augment_config.validate()?;
    loss_config.validate()?;
    if let Some(i) = benign_train.labels.iter().position(|&l| l != BENIGN) {
        return Err(ClanError::Contract(format!(
            "pretraining data must be benign-only; row {i} has class `{}`",
            benign_train.class_names[benign_train.labels[i]]
        )));
    }
    if benign_train.n_features() != mlp_config.input_width {
        return Err(ClanError::dim(
            "pretrain",
            format!(
                "{} features, encoder expects {}",
                benign_train.n_features(),
                mlp_config.input_width
            ),
        ));
    }

    let mut params = init(mlp_config)?;
    let mut history = Vec::with_capacity(train_config.epochs);
    if train_config.epochs == 0 {
        return Ok(PretrainOutput { params, history });
    }
    if benign_train.is_empty() {
        return Err(ClanError::Empty("no benign rows to pretrain on".into()));
    }

    let n = benign_train.len();
    let batches_per_epoch = n.div_ceil(train_config.batch_size);
    let total_steps = train_config.epochs * batches_per_epoch;
    let schedule =
        ScheduleConfig::with_warmup_fraction(train_config.base_lr, total_steps, train_config.warmup_fraction)?;
    let mut state = AdamWState::for_params(&params.tensors(), train_config.weight_decay);
    let mut step = 0usize;

    for epoch in 0..train_config.epochs {
        let batches = batch_indices(n, train_config.batch_size, train_config.seed, epoch as u64)?;
        let mut loss_sum = 0.0;
        let mut epoch_lr = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let x = benign_train.features.gather_rows(idx);
            let x_aug = augment(&x, augment_config, step as u64)?;
            let (z, cache) = forward(&params, &x)?;
            let (z_aug, cache_aug) = forward(&params, &x_aug)?;
            let out = train_config.loss.evaluate(&z, &z_aug, loss_config)?;
            if !out.value.is_finite() {
                return Err(ClanError::Divergence { epoch, batch: b });
            }
            let mut grads = backward(&params, &cache, &out.grad_z)?;
            grads.add_assign(&backward(&params, &cache_aug, &out.grad_other)?)?;

            // lr_at(step + 1): the first update already moves, the last lands on final_lr
            let lr = schedule.lr_at(step + 1)?;
            if b == 0 {
                epoch_lr = lr;
            }
            adamw_step(&mut params.tensors_mut(), &grads.tensors(), &mut state, lr)?;
            if !params.is_finite() {
                return Err(ClanError::Divergence { epoch, batch: b });
            }
            loss_sum += out.value;
            step += 1;
        }
        let mean_loss = loss_sum / batches.len() as f64;
        debug!("epoch {epoch}: loss {mean_loss:.6} lr {epoch_lr:.3e}");
        history.push(EpochStats { epoch, mean_loss, lr: epoch_lr });
    }
    Ok(PretrainOutput { params, history })
}

/// Writes `epoch,mean_loss,lr` rows.
pub fn write_loss_history(history: &[EpochStats], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "epoch,mean_loss,lr")?;
    for h in history {
        writeln!(f, "{},{},{}", h.epoch, h.mean_loss, h.lr)?;
    }
    f.flush()?;
    Ok(())
}

/// Up to `samples_per_class` rows of every class, drawn without replacement by
/// a seeded shuffle. Rows keep their original order.
pub fn stratified_subsample(train: &FlowDataset, samples_per_class: usize, seed: u64) -> Result<FlowDataset> {
    if train.is_empty() {
        return Err(ClanError::Empty("cannot subsample an empty dataset".into()));
    }
    if samples_per_class == 0 {
        return Err(ClanError::Config("samples_per_class must be >= 1".into()));
    }
    let mut keep = Vec::new();
    for (class, mut rows) in train.indices_by_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64);
        rows.shuffle(&mut rng);
        keep.extend_from_slice(&rows[..rows.len().min(samples_per_class)]);
    }
    keep.sort_unstable();
    Ok(train.subset(&keep))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub epochs: usize,
    /// Constant learning rate.
    pub lr: f64,
    pub batch_size: usize,
    pub samples_per_class: usize,
    pub weight_decay: f64,
    /// One fine-tuning run per seed; each seed draws its own labelled subset.
    pub seeds: Vec<u64>,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            epochs: 100,
            lr: 1e-6,
            batch_size: 64,
            samples_per_class: 8,
            weight_decay: 0.0,
            seeds: (0..10).collect(),
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_class == 0 {
            return Err(ClanError::Config("samples_per_class must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ClanError::Config("batch size must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(ClanError::Config(format!("fine-tune lr {} must be positive", self.lr)));
        }
        Ok(())
    }
}

/// Linear classification layer on top of the encoder's latents.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub linear: Linear,
}

impl ClassifierHead {
    /// Zero weights and bias: every class starts equally likely.
    pub fn zeros(latent_width: usize, n_classes: usize) -> Self {
        ClassifierHead { linear: Linear::zeros(latent_width, n_classes) }
    }

    pub fn n_classes(&self) -> usize {
        self.linear.weight.cols()
    }

    pub fn logits(&self, latents: &Matrix) -> Result<Matrix> {
        self.linear.apply(latents)
    }
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (b, c) = logits.shape();
    if labels.len() != b || b == 0 {
        return Err(ClanError::dim("cross_entropy", format!("{} labels for {b} rows", labels.len())));
    }
    let mut grad = Matrix::zeros(b, c);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(ClanError::Range(format!("label {y} for {c} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| (v as f64 - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        total += sum.ln() + max - row[y] as f64;
        for (j, e) in exps.iter().enumerate() {
            let p = e / sum - if j == y { 1.0 } else { 0.0 };
            grad.set(i, j, (p / b as f64) as f32);
        }
    }
    Ok((total / b as f64, grad))
}

pub fn predict(params: &MlpParams, head: &ClassifierHead, x: &Matrix) -> Result<Vec<usize>> {
    let logits = head.logits(&encode_all(params, x)?)?;
    Ok(logits
        .row_iter()
        .map(|r| {
            // first maximum wins ties
            r.iter()
                .enumerate()
                .fold((0, f32::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct FinetuneOutput {
    pub params: MlpParams,
    pub head: ClassifierHead,
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
}

/// Minimizes cross-entropy of `head ∘ encoder` on `labeled`, updating encoder
/// and head together with AdamW at a constant learning rate.
pub fn finetune(
    params: MlpParams,
    head: ClassifierHead,
    labeled: &FlowDataset,
    config: &FinetuneConfig,
    seed: u64,
) -> Result<FinetuneOutput> {
    config.validate()?;
    let present = labeled.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ClanError::Contract(format!(
            "fine-tuning needs at least two classes, subset has {present}"
        )));
    }
    if head.linear.weight.rows() != params.latent_width() || head.n_classes() < labeled.n_classes() {
        return Err(ClanError::dim(
            "finetune",
            format!(
                "head {:?} for latent width {} and {} classes",
                head.linear.weight.shape(),
                params.latent_width(),
                labeled.n_classes()
            ),
        ));
    }

    let mut params = params;
    let mut head = head;
    let mut state = {
        let mut tensors = params.tensors();
        tensors.push(&head.linear.weight);
        tensors.push(&head.linear.bias);
        AdamWState::for_params(&tensors, config.weight_decay)
    };
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let batches = batch_indices(labeled.len(), config.batch_size, seed, epoch as u64)?;
        let mut loss_sum = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let x = labeled.features.gather_rows(idx);
            let y: Vec<usize> = idx.iter().map(|&i| labeled.labels[i]).collect();
            let (z, cache) = forward(&params, &x)?;
            let logits = head.logits(&z)?;
            let (loss, g_logits) = cross_entropy(&logits, &y)?;
            if !loss.is_finite() {
                return Err(ClanError::Divergence { epoch, batch: b });
            }
            let g_head = Linear {
                weight: matmul_tn(&z, &g_logits)?,
                bias: g_logits.column_sums(),
            };
            let g_z = matmul_nt(&g_logits, &head.linear.weight)?;
            let g_enc = backward(&params, &cache, &g_z)?;

            let mut tensors = params.tensors_mut();
            tensors.push(&mut head.linear.weight);
            tensors.push(&mut head.linear.bias);
            let mut grads = g_enc.tensors();
            grads.push(&g_head.weight);
            grads.push(&g_head.bias);
            adamw_step(&mut tensors, &grads, &mut state, config.lr)?;
            loss_sum += loss;
        }
        loss_history.push(loss_sum / batches.len() as f64);
    }

    let preds = predict(&params, &head, &labeled.features)?;
    let correct = preds.iter().zip(&labeled.labels).filter(|(p, y)| p == y).count();
    let train_accuracy = correct as f64 / labeled.len() as f64;
    Ok(FinetuneOutput { params, head, loss_history, train_accuracy })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub macro_f1: f64,
    pub train_accuracy: f64,
}

/// For every seed: draw a stratified labelled subset of `train`, fine-tune a
/// copy of `params` with a fresh zero head, and score macro-F1 on `test`.
pub fn finetune_sweep(
    params: &MlpParams,
    train: &FlowDataset,
    test: &FlowDataset,
    config: &FinetuneConfig,
) -> Result<Vec<SeedResult>> {
    config.validate()?;
    let n_classes = train.n_classes();
    config
        .seeds
        .iter()
        .map(|&seed| {
            let subset = stratified_subsample(train, config.samples_per_class, seed)?;
            let head = ClassifierHead::zeros(params.latent_width(), n_classes);
            let out = finetune(params.clone(), head, &subset, config, seed)?;
            let preds = predict(&out.params, &out.head, &test.features)?;
            Ok(SeedResult {
                seed,
                macro_f1: macro_f1(&preds, &test.labels, n_classes)?,
                train_accuracy: out.train_accuracy,
            })
        })
        .collect()
}

/// Fine-tuned encoder plus classification head.
///
/// File layout after the common 16-byte header (kind = 3): the encoder
/// section exactly as in an encoder checkpoint, then the head weight and bias
/// tensors, then `u32` class count followed by each class name as `u32`
/// length + UTF-8 bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierCheckpoint {
    pub config: MlpConfig,
    pub metric: Metric,
    pub params: MlpParams,
    pub head: ClassifierHead,
    pub class_names: Vec<String>,
}

impl ClassifierCheckpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(Vec::new(), FileKind::Classifier)?;
        write_encoder(&mut w, &self.config, self.metric, &self.params)?;
        w.tensor(&self.head.linear.weight)?;
        w.tensor(&self.head.linear.bias)?;
        w.u32(self.class_names.len() as u32)?;
        for c in &self.class_names {
            w.str(c)?;
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, FileKind::Classifier)?;
        let (config, metric, params) = read_encoder(&mut r)?;
        let weight = r.tensor()?;
        let bias = r.tensor()?;
        let n = r.u32()? as usize;
        if weight.rows() != config.latent_width || weight.cols() != n || bias.shape() != (1, n) {
            return Err(ClanError::ShapeMismatch(format!(
                "head {:?}/{:?} for latent width {} and {n} classes",
                weight.shape(),
                bias.shape(),
                config.latent_width
            )));
        }
        let class_names = (0..n).map(|_| r.str()).collect::<Result<_>>()?;
        r.finish()?;
        Ok(ClassifierCheckpoint {
            config,
            metric,
            params,
            head: ClassifierHead { linear: Linear { weight, bias } },
            class_names,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&Reader::read_file(path.as_ref())?)
    }
}
