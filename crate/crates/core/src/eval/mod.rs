//! Metrics, reports, synthetic data and experiment drivers.

mod bench;
mod experiment;
pub mod lycos;
mod metrics;
mod synth;

pub use bench::{bench_inference, BenchConfig, BenchReport, BenchRow};
pub use experiment::{run_binary_experiment, BinaryExperimentConfig, BinaryExperimentResult};
pub use metrics::{auroc, macro_f1, per_class_auroc, ClassAuroc, EvalReport};
pub use synth::{
    generate_synthetic, generate_synthetic_with, SynthConfig, SynthDataset, BENIGN_CLUSTERS, CLUSTER_SIGMA,
    MIN_ATTACK_SEPARATION,
};
