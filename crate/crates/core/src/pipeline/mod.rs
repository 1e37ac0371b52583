//! Flow datasets: CSV ingestion, min-max scaling, stratified splitting and
//! seeded batch iteration.

mod csv_io;
mod scaler;

pub use csv_io::{load_csv, write_csv, LoadOptions, LoadReport, RejectedRow};
pub use scaler::{apply_scaler, fit_scaler, Scaler};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ClanError, Result};
use crate::numerics::Matrix;

/// Label index of benign traffic.
pub const BENIGN: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    /// `N x f`
    pub features: Matrix,
    /// Class index per row; 0 is benign.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl FlowDataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(ClanError::dim(
                "FlowDataset::new",
                format!("{} labels for {} rows", labels.len(), features.rows()),
            ));
        }
        if feature_names.len() != features.cols() {
            return Err(ClanError::dim(
                "FlowDataset::new",
                format!("{} feature names for {} columns", feature_names.len(), features.cols()),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(ClanError::Range(format!(
                "label {bad} outside the {}-class table",
                class_names.len()
            )));
        }
        if !features.is_finite() {
            return Err(ClanError::Range("dataset contains non-finite features".into()));
        }
        Ok(FlowDataset { features, labels, class_names, feature_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Row count per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order, sharing the class and feature tables.
    pub fn subset(&self, indices: &[usize]) -> FlowDataset {
        FlowDataset {
            features: self.features.gather_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Indices of rows per class, in row order.
    pub fn indices_by_class(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            map.entry(l).or_default().push(i);
        }
        map
    }

    /// Looks up a class by exact name, falling back to a comparison that
    /// ignores case and punctuation (`"Web Attack – Sql Injection"` matches
    /// `"webattack_sql_injection"`).
    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name).or_else(|| {
            let key = normalize_class_name(name);
            self.class_names.iter().position(|c| normalize_class_name(c) == key)
        })
    }

    /// Same rows with features replaced by `scaler` output.
    pub fn scaled(&self, scaler: &Scaler) -> Result<FlowDataset> {
        Ok(FlowDataset { features: apply_scaler(scaler, &self.features)?, ..self.clone() })
    }
}

/// Lower-cased alphanumerics only.
pub fn normalize_class_name(name: &str) -> String {
    name.chars().filter(|c| c.is_alphanumeric()).flat_map(|c| c.to_lowercase()).collect()
}

/// Rows labelled benign; class and feature tables are kept unchanged.
pub fn benign_only(dataset: &FlowDataset) -> FlowDataset {
    let idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == BENIGN).collect();
    dataset.subset(&idx)
}

/// Per-class split: `floor(train_fraction · count)` rows of every class go to
/// train, the rest to test, chosen by a seeded shuffle. Hold-out classes go
/// entirely to test. Both outputs keep the original row order.
pub fn stratified_split(
    dataset: &FlowDataset,
    train_fraction: f64,
    holdout_class_names: &[&str],
    seed: u64,
) -> Result<(FlowDataset, FlowDataset)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(ClanError::Config(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let mut holdout = Vec::with_capacity(holdout_class_names.len());
    for name in holdout_class_names {
        let idx = dataset
            .class_index(name)
            .ok_or_else(|| ClanError::UnknownClass(name.to_string()))?;
        holdout.push(idx);
    }

    let mut train_mask = vec![false; dataset.len()];
    for (class, mut rows) in dataset.indices_by_class() {
        if holdout.contains(&class) {
            continue;
        }
        let n_train = (train_fraction * rows.len() as f64).floor() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64);
        rows.shuffle(&mut rng);
        for &i in &rows[..n_train] {
            train_mask[i] = true;
        }
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| train_mask[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Row indices of one epoch, shuffled by `(seed, epoch)` and chunked into
/// batches of `batch_size`; the last batch is short when `n` is not a multiple.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(ClanError::Config("batch size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    Ok(order.chunks(batch_size).map(|c| c.to_vec()).collect())
}

/// Iterator over the feature batches of one epoch.
pub struct BatchIter<'a> {
    features: &'a Matrix,
    batches: std::vec::IntoIter<Vec<usize>>,
}

impl Iterator for BatchIter<'_> {
    type Item = Matrix;

    fn next(&mut self) -> Option<Matrix> {
        self.batches.next().map(|idx| self.features.gather_rows(&idx))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.batches.size_hint()
    }
}

impl ExactSizeIterator for BatchIter<'_> {}

pub fn batch_iter(dataset: &FlowDataset, batch_size: usize, seed: u64, epoch: u64) -> Result<BatchIter<'_>> {
    let batches = batch_indices(dataset.len(), batch_size, seed, epoch)?;
    Ok(BatchIter { features: &dataset.features, batches: batches.into_iter() })
}
