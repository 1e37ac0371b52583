//! Inference timing: centroid scoring against exhaustive nearest-neighbour
//! scoring over growing caches of training latents.
//!
//! Only the scoring stage is timed. Latents are drawn at random, so the
//! encoder cost (identical for both scorers) stays out of the comparison.

use std::fmt;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ClanError, Result};
use crate::inference::{BenignCentroid, KnnScorer, Partition};
use crate::numerics::{Matrix, Metric};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub train_sizes: Vec<usize>,
    pub latent_width: usize,
    pub queries: usize,
    pub metric: Metric,
    pub seed: u64,
    /// Each trial repeats the query set until at least this much time passes.
    pub min_trial_time: Duration,
    /// The fastest of this many trials is reported.
    pub trials: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            train_sizes: vec![1_000, 10_000, 100_000],
            latent_width: 32,
            queries: 256,
            metric: Metric::Cosine,
            seed: 0,
            min_trial_time: Duration::from_millis(20),
            trials: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n_train: usize,
    pub centroid_ns_per_query: f64,
    pub knn_ns_per_query: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Per-query time at the largest cache size over that at the smallest.
    pub fn centroid_ratio(&self) -> f64 {
        self.ratio(|r| r.centroid_ns_per_query)
    }

    pub fn knn_ratio(&self) -> f64 {
        self.ratio(|r| r.knn_ns_per_query)
    }

    fn ratio(&self, f: impl Fn(&BenchRow) -> f64) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => f(b) / f(a),
            _ => f64::NAN,
        }
    }

    /// Columns: `n_train,centroid_ns_per_query,knn_ns_per_query`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_train,centroid_ns_per_query,knn_ns_per_query\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.3},{:.3}\n", r.n_train, r.centroid_ns_per_query, r.knn_ns_per_query));
        }
        s
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10}  {:>16}  {:>16}", "n_train", "centroid ns/q", "knn ns/q")?;
        for r in &self.rows {
            writeln!(f, "{:>10}  {:>16.1}  {:>16.1}", r.n_train, r.centroid_ns_per_query, r.knn_ns_per_query)?;
        }
        write!(
            f,
            "ratio largest/smallest: centroid {:.3}x, knn {:.1}x",
            self.centroid_ratio(),
            self.knn_ratio()
        )
    }
}

fn random_latents(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<Matrix> {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Best-of-trials nanoseconds per query for `run`, which scores `queries` rows.
fn time_per_query(queries: usize, config: &BenchConfig, mut run: impl FnMut() -> Result<f64>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..config.trials.max(1) {
        let start = Instant::now();
        let mut reps = 0u64;
        while reps == 0 || start.elapsed() < config.min_trial_time {
            black_box(run()?);
            reps += 1;
        }
        let ns = start.elapsed().as_nanos() as f64 / (reps as f64 * queries as f64);
        best = best.min(ns);
    }
    Ok(best)
}

pub fn bench_inference(config: &BenchConfig) -> Result<BenchReport> {
    if config.train_sizes.is_empty() || config.queries == 0 || config.latent_width == 0 {
        return Err(ClanError::Config("bench needs sizes, queries and a latent width".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let queries = random_latents(&mut rng, config.queries, config.latent_width)?;
    // the knn scan is costly at large sizes; a smaller query set keeps trials short
    let knn_queries = queries.gather_rows(&(0..config.queries.min(16)).collect::<Vec<_>>());

    let mut rows = Vec::with_capacity(config.train_sizes.len());
    for &n in &config.train_sizes {
        if n == 0 {
            return Err(ClanError::Config("train size must be >= 1".into()));
        }
        let train = random_latents(&mut rng, n, config.latent_width)?;
        let centroid = BenignCentroid::from_latents(&train, config.metric, Partition::default())?;
        let knn = KnnScorer::new(train, config.metric)?;

        let centroid_ns = time_per_query(queries.rows(), config, || {
            let mut acc = 0.0;
            for q in queries.row_iter() {
                acc += centroid.distance_latent(black_box(q))?;
            }
            Ok(acc)
        })?;
        let knn_ns = time_per_query(knn_queries.rows(), config, || {
            let mut acc = 0.0;
            for q in knn_queries.row_iter() {
                acc += knn.score_latent(black_box(q))?;
            }
            Ok(acc)
        })?;
        log::info!("n_train {n}: centroid {centroid_ns:.1} ns/q, knn {knn_ns:.1} ns/q");
        rows.push(BenchRow { n_train: n, centroid_ns_per_query: centroid_ns, knn_ns_per_query: knn_ns });
    }
    Ok(BenchReport { rows })
}
