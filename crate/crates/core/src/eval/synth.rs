//! Desk-scale synthetic flow data: a compact benign mixture and well
//! separated attack clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ClanError, Result};
use crate::numerics::Matrix;
use crate::pipeline::FlowDataset;

pub const BENIGN_CLUSTERS: usize = 3;
pub const CLUSTER_SIGMA: f64 = 0.1;
/// Minimum Euclidean distance from every attack mean to every benign mean.
pub const MIN_ATTACK_SEPARATION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_benign: usize,
    pub n_malicious: usize,
    pub n_features: usize,
    pub n_attack_classes: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_benign: usize, n_malicious: usize, n_features: usize, seed: u64) -> Self {
        SynthConfig { n_benign, n_malicious, n_features, n_attack_classes: 3, seed }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub dataset: FlowDataset,
    pub benign_means: Vec<Vec<f64>>,
    pub attack_means: Vec<Vec<f64>>,
}

/// Benign rows come from three Gaussian clusters (per-axis σ = 0.1) with
/// means uniform in `[-0.5, 0.5]^f`. Each attack class is a Gaussian with the
/// same σ whose mean sits in a random direction at distance
/// `1.5 + max‖benign mean‖` from the origin, hence at least 1.5 from every
/// benign mean. Rows are benign first, then attack classes in order; attack
/// rows are split as evenly as possible across classes.
pub fn generate_synthetic(n_benign: usize, n_malicious: usize, f: usize, seed: u64) -> Result<FlowDataset> {
    Ok(generate_synthetic_with(&SynthConfig::new(n_benign, n_malicious, f, seed))?.dataset)
}

pub fn generate_synthetic_with(config: &SynthConfig) -> Result<SynthDataset> {
    let f = config.n_features;
    if f < 2 {
        return Err(ClanError::Config(format!("synthetic data needs >= 2 features, got {f}")));
    }
    if config.n_malicious > 0 && config.n_attack_classes == 0 {
        return Err(ClanError::Config("malicious rows requested with zero attack classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, CLUSTER_SIGMA).expect("valid sigma");
    let unit = Normal::new(0.0, 1.0).expect("valid sigma");

    let benign_means: Vec<Vec<f64>> = (0..BENIGN_CLUSTERS)
        .map(|_| (0..f).map(|_| rng.random_range(-0.5..=0.5)).collect())
        .collect();
    let max_norm = benign_means
        .iter()
        .map(|m| m.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let radius = MIN_ATTACK_SEPARATION + max_norm;
    let attack_means: Vec<Vec<f64>> = (0..config.n_attack_classes)
        .map(|_| {
            let dir: Vec<f64> = (0..f).map(|_| unit.sample(&mut rng)).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            dir.into_iter().map(|v| v / n * radius).collect()
        })
        .collect();

    let total = config.n_benign + config.n_malicious;
    let mut data = Vec::with_capacity(total * f);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..config.n_benign {
        let mean = &benign_means[rng.random_range(0..BENIGN_CLUSTERS)];
        data.extend(mean.iter().map(|&m| (m + noise.sample(&mut rng)) as f32));
        labels.push(0);
    }
    let k = config.n_attack_classes.max(1);
    for c in 0..config.n_attack_classes {
        let count = config.n_malicious / k + usize::from(c < config.n_malicious % k);
        for _ in 0..count {
            data.extend(attack_means[c].iter().map(|&m| (m + noise.sample(&mut rng)) as f32));
            labels.push(c + 1);
        }
    }

    let mut class_names = vec!["benign".to_string()];
    class_names.extend((1..=config.n_attack_classes).map(|c| format!("attack_{c}")));
    let feature_names = (0..f).map(|j| format!("f{j}")).collect();
    let dataset = FlowDataset::new(Matrix::from_vec(total, f, data)?, labels, class_names, feature_names)?;
    Ok(SynthDataset { dataset, benign_means, attack_means })
}
