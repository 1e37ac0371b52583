//! Trains the margin objective and the NT-Xent style baseline under the same
//! data, schedule, optimizer and augmentation, then compares mean AUROC.
//!
//!     cargo run --release --example compare_losses -- [epochs]

use clan::augmentation::AugmentConfig;
use clan::eval::{generate_synthetic, run_binary_experiment, BinaryExperimentConfig};
use clan::loss::LossKind;
use clan::model::MlpConfig;
use clan::trainer::TrainConfig;

fn main() -> clan::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let data = generate_synthetic(3_000, 600, 16, 7)?;
    for loss in [LossKind::Clan, LossKind::NtXentBaseline] {
        for seed in 0..2 {
            let config = BinaryExperimentConfig {
                mlp: MlpConfig { seed, ..MlpConfig::with_defaults(16) },
                train: TrainConfig { epochs, seed, loss, ..TrainConfig::default() },
                augment: AugmentConfig { seed, ..AugmentConfig::default() },
                ..BinaryExperimentConfig::default()
            };
            let r = run_binary_experiment(&data, &config)?;
            let last = r.history.last().map_or(f64::NAN, |h| h.mean_loss);
            println!("{:<16} seed {seed}  final loss {last:>9.4}  mean AUROC {:.4}", loss.to_string(), r.report.mean_auroc);
        }
    }
    Ok(())
}
