//! Pretrains the encoder on benign rows and writes the checkpoint plus the
//! per-epoch loss history.
//!
//!     cargo run --release --example pretrain_clan -- [out_dir]

use std::path::PathBuf;

use clan::augmentation::AugmentConfig;
use clan::eval::generate_synthetic;
use clan::loss::LossConfig;
use clan::model::{Checkpoint, MlpConfig};
use clan::pipeline::{benign_only, fit_scaler};
use clan::trainer::{pretrain, write_loss_history, TrainConfig};

fn main() -> clan::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let benign = benign_only(&generate_synthetic(2_000, 0, 16, 1)?);
    let scaler = fit_scaler(&benign.features)?;
    let benign = benign.scaled(&scaler)?;

    let mlp = MlpConfig::with_defaults(benign.n_features());
    let train = TrainConfig { epochs: 15, ..TrainConfig::default() };
    let loss = LossConfig::default();
    let run = pretrain(&benign, &mlp, &train, &AugmentConfig::default(), &loss)?;

    for h in run.history.iter().step_by(3) {
        println!("epoch {:>3}  loss {:>10.4}  lr {:.2e}", h.epoch, h.mean_loss, h.lr);
    }
    let ckpt = out.join("encoder.clan");
    Checkpoint { config: mlp, metric: loss.metric, params: run.params, scaler: Some(scaler) }.save(&ckpt)?;
    write_loss_history(&run.history, out.join("loss_history.csv"))?;
    println!("saved {}", ckpt.display());
    Ok(())
}
