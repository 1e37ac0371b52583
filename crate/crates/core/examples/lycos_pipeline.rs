//! The full binary protocol on a Lycos2017 flow CSV: drop identifier
//! columns, hold Heartbleed and SQL injection out of training, pretrain on
//! benign flows and print per-class AUROC in the reference row order.
//!
//!     cargo run --release --example lycos_pipeline -- path/to/lycos.csv [epochs]

use clan::eval::{lycos, run_binary_experiment, BinaryExperimentConfig};
use clan::model::MlpConfig;
use clan::pipeline::{load_csv, LoadOptions};
use clan::trainer::TrainConfig;

fn main() -> clan::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: lycos_pipeline <csv> [epochs]");
        std::process::exit(1);
    };
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);

    let mut opts = LoadOptions::new(lycos::LABEL_COLUMN, lycos::BENIGN_LABEL);
    opts.drop_columns = lycos::ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    let (data, load) = load_csv(&path, &opts)?;
    println!(
        "{} rows ({} rejected), {} features, {} classes",
        data.len(),
        load.dropped(),
        data.n_features(),
        data.n_classes()
    );

    let config = BinaryExperimentConfig {
        holdout: lycos::HOLDOUT_CLASSES.iter().map(|s| s.to_string()).collect(),
        mlp: MlpConfig::with_defaults(data.n_features()),
        train: TrainConfig { epochs, ..TrainConfig::default() },
        ..BinaryExperimentConfig::default()
    };
    let result = run_binary_experiment(&data, &config)?;
    let report = result.report.ordered_by(&lycos::REPORT_ORDER);
    println!("{report}");
    report.write_csv("lycos_report.csv")?;
    Ok(())
}
