//! Surrogate negative views: per-entry uniform resampling of feature values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ClanError, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    /// Probability that an entry is replaced, in `(0, 1]`.
    pub p_resample: f64,
    /// Replacement values are drawn from `Uniform(-b, b)`.
    pub b: f32,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { p_resample: 0.5, b: 1.0, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_resample > 0.0 && self.p_resample <= 1.0) {
            return Err(ClanError::Config(format!(
                "p_resample {} outside (0, 1]",
                self.p_resample
            )));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(ClanError::Config(format!("resample bound b = {} must be positive", self.b)));
        }
        Ok(())
    }
}

/// Returns a copy of `batch` in which each entry is independently replaced by
/// a `Uniform(-b, b)` draw with probability `p_resample`.
///
/// The random stream is ChaCha8 keyed by `config.seed` with stream id
/// `stream_position`, so a given position always yields the same mask and values.
pub fn augment(batch: &Matrix, config: &AugmentConfig, stream_position: u64) -> Result<Matrix> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream_position);
    let b = config.b;
    let mut out = batch.clone();
    for v in out.as_mut_slice() {
        // both draws happen for every entry so the stream layout does not
        // depend on the mask
        let u: f64 = rng.random();
        let replacement = rng.random_range(-b..=b);
        if u < config.p_resample {
            *v = replacement;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|i| (i as f32 * 0.37).sin() * 3.0).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn vanishing_probability_is_identity() {
        let x = batch(20, 7);
        let cfg = AugmentConfig { p_resample: 1e-12, b: 1.0, seed: 3 };
        assert_eq!(augment(&x, &cfg, 0).unwrap(), x);
    }

    #[test]
    fn full_resampling_stays_in_support() {
        let x = batch(50, 9);
        let cfg = AugmentConfig { p_resample: 1.0, b: 1.0, seed: 3 };
        let out = augment(&x, &cfg, 5).unwrap();
        assert!(out.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn half_probability_frequency() {
        // inputs lie outside [-b, b], so every changed entry is a resample
        let x = Matrix::from_vec(1000, 100, vec![5.0; 100_000]).unwrap();
        let cfg = AugmentConfig { p_resample: 0.5, b: 1.0, seed: 17 };
        let out = augment(&x, &cfg, 0).unwrap();
        let changed = out.as_slice().iter().filter(|&&v| v != 5.0).count() as f64;
        let n = 100_000.0;
        let sigma = (n * 0.25f64).sqrt();
        assert!((changed - n / 2.0).abs() <= 3.0 * sigma, "changed = {changed}");
    }

    #[test]
    fn invalid_configs() {
        let x = batch(2, 2);
        for cfg in [
            AugmentConfig { p_resample: 0.0, b: 1.0, seed: 0 },
            AugmentConfig { p_resample: 1.5, b: 1.0, seed: 0 },
            AugmentConfig { p_resample: 0.5, b: 0.0, seed: 0 },
        ] {
            assert!(matches!(augment(&x, &cfg, 0), Err(ClanError::Config(_))));
        }
    }
}
