//! Fine-tunes a pretrained encoder with a linear head on a handful of
//! labelled flows per class and reports macro-F1 per labelling budget.

use clan::augmentation::AugmentConfig;
use clan::eval::generate_synthetic;
use clan::loss::LossConfig;
use clan::model::MlpConfig;
use clan::pipeline::{benign_only, fit_scaler, stratified_split};
use clan::trainer::{finetune_sweep, pretrain, FinetuneConfig, TrainConfig};

fn main() -> clan::Result<()> {
    let data = generate_synthetic(2_000, 1_200, 16, 11)?;
    let (train, test) = stratified_split(&data, 0.5, &[], 0)?;
    let scaler = fit_scaler(&benign_only(&train).features)?;
    let (train, test) = (train.scaled(&scaler)?, test.scaled(&scaler)?);

    let train_cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let mlp = MlpConfig::with_defaults(16);
    let pre = pretrain(&benign_only(&train), &mlp, &train_cfg, &AugmentConfig::default(), &LossConfig::default())?;

    for k in [8, 16, 32, 64] {
        let cfg = FinetuneConfig { samples_per_class: k, seeds: (0..3).collect(), ..FinetuneConfig::default() };
        let runs = finetune_sweep(&pre.params, &train, &test, &cfg)?;
        let f1: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.macro_f1)).collect();
        let mean = runs.iter().map(|r| r.macro_f1).sum::<f64>() / runs.len() as f64;
        println!("{k:>3} per class: macro-F1 {mean:.4}  runs [{}]", f1.join(", "));
    }
    Ok(())
}
