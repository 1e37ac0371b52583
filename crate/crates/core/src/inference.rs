//! Post-training scoring against the cached benign centroid, plus the
//! exhaustive nearest-neighbour scorer used as the linear-cost reference.
//!
//! A sample at latent distance `d` from the centroid is benign with
//! probability `e^{−d} / Z`; it is labelled benign when that probability
//! exceeds 0.5. Scoring touches the centroid only, so its cost does not grow
//! with the size of the training set.

use std::path::Path;

use crate::error::{ClanError, Result};
use crate::format::{FileKind, Reader, Writer};
use crate::model::{encode, MlpParams};
use crate::numerics::{dot, sq_euclidean, Matrix, Metric};
use crate::pipeline::Scaler;

/// Quantile of benign training distances that calibration maps to probability 0.5.
pub const DEFAULT_CALIBRATION_QUANTILE: f64 = 0.99;

/// Rows encoded per chunk when streaming a large matrix through the encoder.
const ENCODE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct BenignCentroid {
    pub mu0: Vec<f32>,
    pub metric: Metric,
    /// Partition constant `Z > 0`.
    pub partition: f64,
}

/// How the partition constant of a new centroid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Partition {
    Fixed(f64),
    /// `Z = e^{−d_q} / 0.5` where `d_q` is this quantile of the benign
    /// training distances to the centroid.
    Quantile(f64),
}

impl Default for Partition {
    fn default() -> Self {
        Partition::Quantile(DEFAULT_CALIBRATION_QUANTILE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub distance: f64,
    pub prob_benign: f64,
    pub predicted_label: u8,
}

/// Predicted label for a benign probability: 0 iff `prob > 0.5`.
#[inline]
pub fn classify(prob_benign: f64) -> u8 {
    if prob_benign > 0.5 {
        0
    } else {
        1
    }
}

/// Encodes `x` in bounded chunks.
pub fn encode_all(params: &MlpParams, x: &Matrix) -> Result<Matrix> {
    if x.rows() <= ENCODE_CHUNK {
        return encode(params, x);
    }
    let mut out: Option<Matrix> = None;
    let idx: Vec<usize> = (0..x.rows()).collect();
    for chunk in idx.chunks(ENCODE_CHUNK) {
        let z = encode(params, &x.gather_rows(chunk))?;
        out = Some(match out {
            None => z,
            Some(acc) => acc.vstack(&z)?,
        });
    }
    Ok(out.expect("at least one chunk"))
}

/// Arithmetic mean of latents in `f64`. Under the cosine metric rows are
/// L2-normalized before averaging and the mean is renormalized.
pub fn latent_mean(latents: &Matrix, metric: Metric) -> Result<Vec<f32>> {
    if latents.rows() == 0 {
        return Err(ClanError::Empty("centroid of zero latents".into()));
    }
    let q = latents.cols();
    let mut acc = vec![0.0f64; q];
    for (i, r) in latents.row_iter().enumerate() {
        let scale = match metric {
            Metric::SquaredEuclidean => 1.0,
            Metric::Cosine => {
                let n = dot(r, r).sqrt();
                if n == 0.0 {
                    return Err(ClanError::degenerate("centroid", format!("latent {i} has zero norm")));
                }
                1.0 / n
            }
        };
        acc.iter_mut().zip(r).for_each(|(a, &v)| *a += scale * v as f64);
    }
    let n = latents.rows() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    if metric == Metric::Cosine {
        let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ClanError::degenerate("centroid", "mean direction is zero"));
        }
        acc.iter_mut().for_each(|a| *a /= norm);
    }
    Ok(acc.into_iter().map(|v| v as f32).collect())
}

/// Linear-interpolated quantile of `values`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(ClanError::Empty("quantile of no values".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(ClanError::Config(format!("quantile {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

impl BenignCentroid {
    pub fn new(mu0: Vec<f32>, metric: Metric, partition: f64) -> Result<Self> {
        let c = BenignCentroid { mu0, metric, partition };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.partition > 0.0) || !self.partition.is_finite() {
            return Err(ClanError::Range(format!("partition constant {} must be positive", self.partition)));
        }
        if self.mu0.iter().any(|v| !v.is_finite()) {
            return Err(ClanError::Range("centroid has non-finite entries".into()));
        }
        if self.metric == Metric::Cosine && dot(&self.mu0, &self.mu0) == 0.0 {
            return Err(ClanError::degenerate("centroid", "zero vector under cosine metric"));
        }
        Ok(())
    }

    /// Centroid of precomputed benign latents.
    pub fn from_latents(latents: &Matrix, metric: Metric, partition: Partition) -> Result<Self> {
        let mu0 = latent_mean(latents, metric)?;
        let z = match partition {
            Partition::Fixed(z) => z,
            Partition::Quantile(q) => {
                let probe = BenignCentroid { mu0: mu0.clone(), metric, partition: 1.0 };
                let d = probe.distances(latents)?;
                calibrate_partition(quantile(&d, q)?)
            }
        };
        BenignCentroid::new(mu0, metric, z)
    }

    pub fn latent_width(&self) -> usize {
        self.mu0.len()
    }

    /// Distance of one latent to the centroid.
    #[inline]
    pub fn distance_latent(&self, z: &[f32]) -> Result<f64> {
        self.metric.distance(z, &self.mu0)
    }

    pub fn distances(&self, latents: &Matrix) -> Result<Vec<f64>> {
        if latents.cols() != self.mu0.len() {
            return Err(ClanError::dim(
                "centroid distance",
                format!("latent width {} vs centroid {}", latents.cols(), self.mu0.len()),
            ));
        }
        latents.row_iter().map(|r| self.distance_latent(r)).collect()
    }

    #[inline]
    pub fn record(&self, distance: f64) -> ScoreRecord {
        let prob_benign = (-distance).exp() / self.partition;
        ScoreRecord { distance, prob_benign, predicted_label: classify(prob_benign) }
    }

    pub fn score_latents(&self, latents: &Matrix) -> Result<Vec<ScoreRecord>> {
        Ok(self.distances(latents)?.into_iter().map(|d| self.record(d)).collect())
    }
}

/// `Z` that maps distance `d` to probability exactly 0.5.
pub fn calibrate_partition(d: f64) -> f64 {
    (-d).exp() / 0.5
}

/// Encodes the benign training rows and caches their centroid.
pub fn compute_centroid(
    params: &MlpParams,
    benign_features: &Matrix,
    metric: Metric,
    partition: Partition,
) -> Result<BenignCentroid> {
    if benign_features.rows() == 0 {
        return Err(ClanError::Empty("centroid needs at least one benign row".into()));
    }
    let latents = encode_all(params, benign_features)?;
    BenignCentroid::from_latents(&latents, metric, partition)
}

/// Scores scaled feature rows. `metric` is the metric the encoder was trained
/// with and must match the centroid's.
pub fn score(
    params: &MlpParams,
    centroid: &BenignCentroid,
    metric: Metric,
    x: &Matrix,
) -> Result<Vec<ScoreRecord>> {
    if metric != centroid.metric {
        return Err(ClanError::Contract(format!(
            "encoder trained with {metric} but centroid uses {}",
            centroid.metric
        )));
    }
    if params.latent_width() != centroid.latent_width() {
        return Err(ClanError::Contract(format!(
            "encoder latent width {} but centroid width {}",
            params.latent_width(),
            centroid.latent_width()
        )));
    }
    centroid.score_latents(&encode_all(params, x)?)
}

/// Exhaustive nearest-neighbour scorer over cached training latents.
#[derive(Debug, Clone)]
pub struct KnnScorer {
    latents: Matrix,
    metric: Metric,
    /// Unit-normalized copy of the latents for the cosine metric.
    normalized: Option<Matrix>,
}

impl KnnScorer {
    pub fn new(train_latents: Matrix, metric: Metric) -> Result<Self> {
        if train_latents.rows() == 0 {
            return Err(ClanError::Empty("nearest-neighbour scorer needs training latents".into()));
        }
        let normalized = match metric {
            Metric::SquaredEuclidean => None,
            Metric::Cosine => {
                let mut m = train_latents.clone();
                for i in 0..m.rows() {
                    let n = dot(m.row(i), m.row(i)).sqrt();
                    if n == 0.0 {
                        return Err(ClanError::degenerate("knn", format!("training latent {i} has zero norm")));
                    }
                    let inv = (1.0 / n) as f32;
                    m.row_mut(i).iter_mut().for_each(|v| *v *= inv);
                }
                Some(m)
            }
        };
        Ok(KnnScorer { latents: train_latents, metric, normalized })
    }

    pub fn len(&self) -> usize {
        self.latents.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.rows() == 0
    }

    /// Minimum distance from `z` to any training latent.
    pub fn score_latent(&self, z: &[f32]) -> Result<f64> {
        if z.len() != self.latents.cols() {
            return Err(ClanError::dim(
                "knn_baseline_score",
                format!("latent width {} vs {}", z.len(), self.latents.cols()),
            ));
        }
        match (&self.normalized, self.metric) {
            (Some(unit), Metric::Cosine) => {
                let n = dot(z, z).sqrt();
                if n == 0.0 {
                    return Err(ClanError::degenerate("knn", "query latent has zero norm"));
                }
                let best = unit.row_iter().map(|r| dot(z, r)).fold(f64::NEG_INFINITY, f64::max);
                Ok((1.0 - best / n).clamp(0.0, 2.0))
            }
            _ => Ok(self
                .latents
                .row_iter()
                .map(|r| sq_euclidean(z, r))
                .fold(f64::INFINITY, f64::min)),
        }
    }

    pub fn score_latents(&self, latents: &Matrix) -> Result<Vec<f64>> {
        latents.row_iter().map(|r| self.score_latent(r)).collect()
    }
}

/// Nearest-neighbour distance of each row of `x` to `train_latents`.
pub fn knn_baseline_score(
    params: &MlpParams,
    train_latents: &Matrix,
    metric: Metric,
    x: &Matrix,
) -> Result<Vec<f64>> {
    let scorer = KnnScorer::new(train_latents.clone(), metric)?;
    scorer.score_latents(&encode_all(params, x)?)
}

/// Centroid cache file.
///
/// After the common 16-byte header (kind = 2): `u32` metric tag, `f64` LE
/// partition constant, the `1 x q` centroid tensor, then the `1 x f` scaler
/// minima and maxima tensors (both `0 x 0` when no scaler is stored).
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidCache {
    pub centroid: BenignCentroid,
    pub scaler: Option<Scaler>,
}

impl CentroidCache {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(Vec::new(), FileKind::Centroid)?;
        w.u32(self.centroid.metric.tag())?;
        w.f64(self.centroid.partition)?;
        w.tensor(&Matrix::from_vec(1, self.centroid.mu0.len(), self.centroid.mu0.clone())?)?;
        match &self.scaler {
            Some(s) => s.write_to(&mut w)?,
            None => {
                w.tensor(&Matrix::zeros(0, 0))?;
                w.tensor(&Matrix::zeros(0, 0))?;
            }
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, FileKind::Centroid)?;
        let tag = r.u32()?;
        let metric = Metric::from_tag(tag)
            .ok_or_else(|| ClanError::CorruptCheckpoint(format!("unknown metric tag {tag}")))?;
        let partition = r.f64()?;
        let mu0 = r.tensor()?;
        if mu0.rows() != 1 {
            return Err(ClanError::ShapeMismatch(format!("centroid tensor {:?}", mu0.shape())));
        }
        let save = r.pos_marker();
        let lo = r.tensor()?;
        let scaler = if lo.rows() == 0 {
            let hi = r.tensor()?;
            if hi.rows() != 0 {
                return Err(ClanError::ShapeMismatch("scaler minima missing".into()));
            }
            None
        } else {
            r.rewind_to(save);
            Some(Scaler::read_from(&mut r, lo.cols())?)
        };
        r.finish()?;
        let centroid = BenignCentroid::new(mu0.into_vec(), metric, partition)
            .map_err(|e| ClanError::CorruptCheckpoint(e.to_string()))?;
        Ok(CentroidCache { centroid, scaler })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&Reader::read_file(path.as_ref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init, MlpConfig};

    fn m(rows: &[&[f32]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(classify(0.6), 0);
        assert_eq!(classify(0.5), 1);
        assert_eq!(classify(0.2), 1);
        assert_eq!(classify(0.5 + 1e-12), 0);
    }

    #[test]
    fn centroid_of_one_and_two() {
        let one = m(&[&[1.0, -2.0]]);
        let c = BenignCentroid::from_latents(&one, Metric::SquaredEuclidean, Partition::Fixed(1.0)).unwrap();
        assert_eq!(c.mu0, vec![1.0, -2.0]);
        let two = m(&[&[1.0, -2.0], &[3.0, 4.0]]);
        let c = BenignCentroid::from_latents(&two, Metric::SquaredEuclidean, Partition::Fixed(1.0)).unwrap();
        assert_eq!(c.mu0, vec![2.0, 1.0]);
    }

    #[test]
    fn cosine_centroid_is_unit_mean_direction() {
        let z = m(&[&[2.0, 0.0], &[0.0, 5.0]]);
        let c = BenignCentroid::from_latents(&z, Metric::Cosine, Partition::Fixed(1.0)).unwrap();
        let h = std::f32::consts::FRAC_1_SQRT_2;
        assert!((c.mu0[0] - h).abs() < 1e-7 && (c.mu0[1] - h).abs() < 1e-7);
        assert!(BenignCentroid::from_latents(&m(&[&[0.0, 0.0]]), Metric::Cosine, Partition::Fixed(1.0)).is_err());
    }

    #[test]
    fn empty_centroid_is_error() {
        assert!(matches!(
            BenignCentroid::from_latents(&Matrix::zeros(0, 2), Metric::Cosine, Partition::default()),
            Err(ClanError::Empty(_))
        ));
    }

    #[test]
    fn probability_closed_forms() {
        let c = BenignCentroid::new(vec![0.0, 0.0], Metric::SquaredEuclidean, 1.0).unwrap();
        assert_eq!(c.record(0.0).prob_benign, 1.0);
        assert!((c.record(std::f64::consts::LN_2).prob_benign - 0.5).abs() < 1e-15);
        let c = BenignCentroid::new(vec![1.0], Metric::SquaredEuclidean, 1.5).unwrap();
        assert_eq!(c.record(0.0).prob_benign, 1.0 / 1.5);
        assert!(BenignCentroid::new(vec![1.0], Metric::Cosine, 0.0).is_err());
    }

    #[test]
    fn quantile_calibration_hits_half() {
        let z = m(&[&[0.0], &[1.0], &[2.0], &[3.0], &[4.0]]);
        let c = BenignCentroid::from_latents(&z, Metric::SquaredEuclidean, Partition::Quantile(1.0)).unwrap();
        // centroid 2, farthest distance 4
        assert!((c.record(4.0).prob_benign - 0.5).abs() < 1e-12);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.25).unwrap(), 2.5);
    }

    #[test]
    fn metric_mismatch_is_contract_error() {
        let cfg = MlpConfig { input_width: 3, hidden_width: 4, hidden_layers: 1, latent_width: 2, seed: 1 };
        let p = init(&cfg).unwrap();
        let c = BenignCentroid::new(vec![1.0, 0.0], Metric::Cosine, 1.0).unwrap();
        let x = Matrix::zeros(1, 3);
        assert!(matches!(score(&p, &c, Metric::SquaredEuclidean, &x), Err(ClanError::Contract(_))));
    }

    #[test]
    fn knn_examples() {
        let train = m(&[&[0.0, 0.0], &[1.0, 1.0], &[3.0, -1.0]]);
        let s = KnnScorer::new(train.clone(), Metric::SquaredEuclidean).unwrap();
        assert_eq!(s.score_latent(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(s.score_latent(&[3.0, 0.0]).unwrap(), 1.0);
        let single = KnnScorer::new(m(&[&[2.0, 2.0]]), Metric::SquaredEuclidean).unwrap();
        assert_eq!(single.score_latent(&[0.0, 0.0]).unwrap(), 8.0);
        assert!(KnnScorer::new(Matrix::zeros(0, 2), Metric::Cosine).is_err());
        let cos = KnnScorer::new(m(&[&[1.0, 0.0], &[0.0, 2.0]]), Metric::Cosine).unwrap();
        assert!(cos.score_latent(&[0.0, 7.0]).unwrap().abs() < 1e-12);
        assert!((cos.score_latent(&[-1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_round_trip() {
        let cache = CentroidCache {
            centroid: BenignCentroid::new(vec![0.5, -0.5, 1.0], Metric::Cosine, 1.7).unwrap(),
            scaler: Some(Scaler { min: vec![0.0, 1.0], max: vec![2.0, 1.0] }),
        };
        let bytes = cache.to_bytes().unwrap();
        assert_eq!(CentroidCache::from_bytes(&bytes).unwrap(), cache);
        let bare = CentroidCache { scaler: None, ..cache };
        assert_eq!(CentroidCache::from_bytes(&bare.to_bytes().unwrap()).unwrap(), bare);
        assert!(CentroidCache::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }
}
