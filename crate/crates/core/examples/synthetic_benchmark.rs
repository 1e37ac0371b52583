//! Generates a synthetic flow dataset, trains on its benign half and prints
//! the per-class AUROC table.
//!
//!     cargo run --release --example synthetic_benchmark -- [epochs]

use clan::eval::{generate_synthetic, run_binary_experiment, BinaryExperimentConfig};
use clan::model::MlpConfig;
use clan::trainer::TrainConfig;

fn main() -> clan::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let data = generate_synthetic(5_000, 1_000, 16, 7)?;
    println!("{} rows, class counts {:?}", data.len(), data.class_counts());

    let config = BinaryExperimentConfig {
        mlp: MlpConfig::with_defaults(16),
        train: TrainConfig { epochs, ..TrainConfig::default() },
        with_knn: true,
        ..BinaryExperimentConfig::default()
    };
    let result = run_binary_experiment(&data, &config)?;
    println!("\ncentroid scorer\n{}", result.report);
    if let Some(knn) = result.knn_report {
        println!("\nnearest-neighbour scorer\n{knn}");
    }
    Ok(())
}
