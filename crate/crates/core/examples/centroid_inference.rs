//! Caches the benign centroid and scores new flows with a single distance
//! each, printing the probability and label of a few benign and attack rows.

use clan::augmentation::AugmentConfig;
use clan::eval::generate_synthetic;
use clan::inference::{compute_centroid, score, Partition};
use clan::loss::LossConfig;
use clan::model::MlpConfig;
use clan::pipeline::{apply_scaler, benign_only, fit_scaler, stratified_split};
use clan::trainer::{pretrain, TrainConfig};

fn main() -> clan::Result<()> {
    let data = generate_synthetic(2_000, 300, 12, 3)?;
    let (train, test) = stratified_split(&data, 0.5, &[], 0)?;
    let benign = benign_only(&train);
    let scaler = fit_scaler(&benign.features)?;
    let benign = benign.scaled(&scaler)?;

    let loss = LossConfig::default();
    let mlp = MlpConfig { hidden_width: 128, ..MlpConfig::with_defaults(12) };
    let train_cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let params = pretrain(&benign, &mlp, &train_cfg, &AugmentConfig::default(), &loss)?.params;

    // Z maps the 99th percentile of benign distances to probability 0.5
    let centroid = compute_centroid(&params, &benign.features, loss.metric, Partition::default())?;
    println!("metric {}, Z = {:.4}", centroid.metric, centroid.partition);

    let records = score(&params, &centroid, loss.metric, &apply_scaler(&scaler, &test.features)?)?;
    let mut shown = [0usize; 2];
    for (rec, &label) in records.iter().zip(&test.labels) {
        let k = usize::from(label != 0);
        if shown[k] < 4 {
            shown[k] += 1;
            println!(
                "{:<10} d = {:.4}  p(benign) = {:.4}  predicted {}",
                test.class_names[label], rec.distance, rec.prob_benign, rec.predicted_label
            );
        }
    }
    let flagged_benign = records.iter().zip(&test.labels).filter(|(r, &l)| l == 0 && r.predicted_label == 1).count();
    let missed = records.iter().zip(&test.labels).filter(|(r, &l)| l != 0 && r.predicted_label == 0).count();
    println!("false alarms {flagged_benign}, missed attacks {missed}, of {} rows", records.len());
    Ok(())
}
