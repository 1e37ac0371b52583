//! Saves and reloads every artifact kind and shows what a corrupted or
//! version-bumped file produces.

use clan::inference::{compute_centroid, CentroidCache, Partition};
use clan::model::{init, Checkpoint, MlpConfig};
use clan::numerics::Metric;
use clan::trainer::{ClassifierCheckpoint, ClassifierHead};

fn main() -> clan::Result<()> {
    let dir = std::env::temp_dir().join("clan_roundtrip");
    std::fs::create_dir_all(&dir)?;
    let config = MlpConfig { hidden_width: 64, latent_width: 8, ..MlpConfig::with_defaults(10) };
    let params = init(&config)?;

    let ckpt = Checkpoint { config, metric: Metric::Cosine, params: params.clone(), scaler: None };
    let path = dir.join("encoder.clan");
    ckpt.save(&path)?;
    assert_eq!(Checkpoint::load(&path)?, ckpt);
    println!("encoder: {} bytes", std::fs::metadata(&path)?.len());

    let x = clan::numerics::Matrix::from_vec(4, 10, (0..40).map(|v| v as f32 / 40.0).collect())?;
    let centroid = compute_centroid(&params, &x, Metric::Cosine, Partition::Fixed(1.0))?;
    let cache = CentroidCache { centroid, scaler: None };
    let cpath = dir.join("centroid.clan");
    cache.save(&cpath)?;
    assert_eq!(CentroidCache::load(&cpath)?, cache);
    println!("centroid: {} bytes", std::fs::metadata(&cpath)?.len());

    let cls = ClassifierCheckpoint {
        config,
        metric: Metric::Cosine,
        params,
        head: ClassifierHead::zeros(8, 3),
        class_names: vec!["benign".into(), "dos".into(), "scan".into()],
    };
    let kpath = dir.join("classifier.clan");
    cls.save(&kpath)?;
    assert_eq!(ClassifierCheckpoint::load(&kpath)?, cls);
    println!("classifier: {} bytes", std::fs::metadata(&kpath)?.len());

    let mut bytes = std::fs::read(&path)?;
    bytes.truncate(bytes.len() - 3);
    println!("truncated: {}", Checkpoint::from_bytes(&bytes).unwrap_err());
    let mut bytes = std::fs::read(&path)?;
    bytes[8] = 9;
    println!("version 9: {}", Checkpoint::from_bytes(&bytes).unwrap_err());
    println!("wrong kind: {}", Checkpoint::load(&cpath).unwrap_err());
    Ok(())
}
