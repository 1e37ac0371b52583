//! Contrastive objectives over a batch of latents and the latents of its
//! augmented view.
//!
//! [`clan_loss`] treats augmented samples as negatives: every pair of original
//! latents is pulled together, and every (original, augmented) pair closer
//! than the margin is pushed apart. The negative sum runs over *all*
//! augmented rows, including the augmentation of the anchor itself.
//!
//! [`ntxent_baseline_loss`] is the conventional positive-pair objective used
//! for comparison: the augmented view of a sample is its positive, and the
//! softmax denominator ranges over the original batch.

use std::fmt;
use std::str::FromStr;

use crate::error::{ClanError, Result};
use crate::numerics::{dot, sq_euclidean, Matrix, Metric};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub metric: Metric,
    /// Hinge margin `m`, in `(0, 1]`.
    pub margin: f64,
    /// Softmax temperature of the baseline loss.
    pub temperature: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { metric: Metric::Cosine, margin: 1.0, temperature: 1.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin <= 1.0) {
            return Err(ClanError::Config(format!("margin {} outside (0, 1]", self.margin)));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(ClanError::Config(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Which objective the trainer optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    Clan,
    NtXentBaseline,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Clan => "clan",
            LossKind::NtXentBaseline => "ntxent_baseline",
        })
    }
}

impl FromStr for LossKind {
    type Err = ClanError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "clan" => Ok(LossKind::Clan),
            "ntxent_baseline" | "ntxent" | "baseline" => Ok(LossKind::NtXentBaseline),
            other => Err(ClanError::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// Loss value with its gradients with respect to both latent batches.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    pub grad_z: Matrix,
    pub grad_other: Matrix,
}

impl LossKind {
    pub fn evaluate(self, z: &Matrix, z_aug: &Matrix, config: &LossConfig) -> Result<LossOutput> {
        match self {
            LossKind::Clan => clan_loss(z, z_aug, config),
            LossKind::NtXentBaseline => ntxent_baseline_loss(z, z_aug, config),
        }
    }
}

/// Row views plus squared norms, checked for the cosine metric.
struct Rows<'a> {
    m: &'a Matrix,
    norms: Vec<f64>,
}

impl<'a> Rows<'a> {
    fn new(m: &'a Matrix, metric: Metric, op: &'static str) -> Result<Self> {
        let norms: Vec<f64> = m.row_iter().map(|r| dot(r, r)).collect();
        if metric == Metric::Cosine {
            if let Some(i) = norms.iter().position(|&n| n == 0.0) {
                return Err(ClanError::degenerate(op, format!("row {i} has zero norm")));
            }
        }
        Ok(Rows { m, norms })
    }

    #[inline]
    fn row(&self, i: usize) -> &'a [f32] {
        self.m.row(i)
    }
}

struct Pair<'a> {
    a: &'a [f32],
    na: f64,
    b: &'a [f32],
    nb: f64,
    /// cosine similarity; unused for the squared Euclidean metric
    sim: f64,
}

impl<'a> Pair<'a> {
    #[inline]
    fn new(x: &Rows<'a>, i: usize, y: &Rows<'a>, j: usize) -> Self {
        Pair { a: x.row(i), na: x.norms[i], b: y.row(j), nb: y.norms[j], sim: 0.0 }
    }

    #[inline]
    fn distance(&mut self, metric: Metric) -> f64 {
        match metric {
            Metric::SquaredEuclidean => sq_euclidean(self.a, self.b),
            Metric::Cosine => {
                self.sim = dot(self.a, self.b) / (self.na * self.nb).sqrt();
                (1.0 - self.sim).clamp(0.0, 2.0)
            }
        }
    }

    /// Adds `coef · ∂d/∂a` to `ga` and `coef · ∂d/∂b` to `gb`. Must follow `distance`.
    #[inline]
    fn add_grad(&self, metric: Metric, coef: f64, ga: &mut [f64], gb: &mut [f64]) {
        match metric {
            Metric::SquaredEuclidean => {
                for k in 0..self.a.len() {
                    let g = 2.0 * coef * (self.a[k] as f64 - self.b[k] as f64);
                    ga[k] += g;
                    gb[k] -= g;
                }
            }
            Metric::Cosine => {
                let inv_ab = 1.0 / (self.na * self.nb).sqrt();
                let sa = self.sim / self.na;
                let sb = self.sim / self.nb;
                for k in 0..self.a.len() {
                    let (x, y) = (self.a[k] as f64, self.b[k] as f64);
                    ga[k] -= coef * (y * inv_ab - sa * x);
                    gb[k] -= coef * (x * inv_ab - sb * y);
                }
            }
        }
    }
}

/// Gradient accumulator with one `f64` row per sample.
struct Grad {
    q: usize,
    data: Vec<f64>,
}

impl Grad {
    fn new(b: usize, q: usize) -> Self {
        Grad { q, data: vec![0.0; b * q] }
    }

    /// Mutable rows `i` and `j` of two (possibly identical) accumulators.
    fn rows2<'g>(x: &'g mut Grad, i: usize, y: &'g mut Grad, j: usize) -> (&'g mut [f64], &'g mut [f64]) {
        let q = x.q;
        (&mut x.data[i * q..(i + 1) * q], &mut y.data[j * q..(j + 1) * q])
    }

    fn rows_same(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert_ne!(i, j);
        let q = self.q;
        if i < j {
            let (lo, hi) = self.data.split_at_mut(j * q);
            (&mut lo[i * q..(i + 1) * q], &mut hi[..q])
        } else {
            let (lo, hi) = self.data.split_at_mut(i * q);
            let (a, b) = (&mut hi[..q], &mut lo[j * q..(j + 1) * q]);
            (a, b)
        }
    }

    fn into_matrix(self, rows: usize, scale: f64) -> Matrix {
        let data = self.data.into_iter().map(|v| (v * scale) as f32).collect();
        Matrix::from_vec(rows, self.q, data).expect("gradient shape")
    }
}

fn check_pair(op: &'static str, z: &Matrix, other: &Matrix) -> Result<()> {
    if z.shape() != other.shape() {
        return Err(ClanError::dim(op, format!("{:?} vs {:?}", z.shape(), other.shape())));
    }
    if z.rows() == 0 {
        return Err(ClanError::Empty(format!("{op}: batch has no rows")));
    }
    Ok(())
}

/// `(1/B) Σ_a [ Σ_{p≠a} d(z_a, z_p) + Σ_n max(0, m − d(z_a, z̃_n)) ]` and its
/// exact subgradients (zero at the hinge kink).
pub fn clan_loss(z: &Matrix, z_tilde: &Matrix, config: &LossConfig) -> Result<LossOutput> {
    const OP: &str = "clan_loss";
    config.validate()?;
    check_pair(OP, z, z_tilde)?;
    let metric = config.metric;
    let (b, q) = z.shape();
    let zr = Rows::new(z, metric, OP)?;
    let tr = Rows::new(z_tilde, metric, OP)?;
    let mut gz = Grad::new(b, q);
    let mut gt = Grad::new(b, q);
    let mut total = 0.0f64;

    for a in 0..b {
        // unordered positive pairs; each appears twice in the double sum
        for p in a + 1..b {
            let mut pair = Pair::new(&zr, a, &zr, p);
            total += 2.0 * pair.distance(metric);
            let (ga, gp) = gz.rows_same(a, p);
            pair.add_grad(metric, 2.0, ga, gp);
        }
        for n in 0..b {
            let mut pair = Pair::new(&zr, a, &tr, n);
            let slack = config.margin - pair.distance(metric);
            if slack > 0.0 {
                total += slack;
                let (ga, gn) = Grad::rows2(&mut gz, a, &mut gt, n);
                pair.add_grad(metric, -1.0, ga, gn);
            }
        }
    }

    let inv_b = 1.0 / b as f64;
    Ok(LossOutput {
        value: total * inv_b,
        grad_z: gz.into_matrix(b, inv_b),
        grad_other: gt.into_matrix(b, inv_b),
    })
}

/// `−(1/B) Σ_a log( e^{−d(z_a, z⁺_a)/τ} / Σ_j e^{−d(z_a, z_j)/τ} )` with a
/// max-shifted log-sum-exp.
pub fn ntxent_baseline_loss(z: &Matrix, z_pos: &Matrix, config: &LossConfig) -> Result<LossOutput> {
    const OP: &str = "ntxent_baseline_loss";
    config.validate()?;
    check_pair(OP, z, z_pos)?;
    let metric = config.metric;
    let tau = config.temperature;
    let (b, q) = z.shape();
    let zr = Rows::new(z, metric, OP)?;
    let pr = Rows::new(z_pos, metric, OP)?;
    let mut gz = Grad::new(b, q);
    let mut gp = Grad::new(b, q);
    let mut total = 0.0f64;
    let mut logits = vec![0.0f64; b];

    for a in 0..b {
        let mut pos = Pair::new(&zr, a, &pr, a);
        let d_pos = pos.distance(metric);
        let (ga, gpa) = Grad::rows2(&mut gz, a, &mut gp, a);
        pos.add_grad(metric, 1.0 / tau, ga, gpa);

        for (j, l) in logits.iter_mut().enumerate() {
            *l = -Pair::new(&zr, a, &zr, j).distance(metric) / tau;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let lse = max + sum.ln();
        total += d_pos / tau + lse;

        for j in 0..b {
            if j == a {
                // d(z_a, z_a) is identically zero under both metrics
                continue;
            }
            let w = (logits[j] - lse).exp();
            let mut pair = Pair::new(&zr, a, &zr, j);
            pair.distance(metric);
            let (ga, gj) = gz.rows_same(a, j);
            pair.add_grad(metric, -w / tau, ga, gj);
        }
    }

    let inv_b = 1.0 / b as f64;
    Ok(LossOutput {
        value: total * inv_b,
        grad_z: gz.into_matrix(b, inv_b),
        grad_other: gp.into_matrix(b, inv_b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn cfg(metric: Metric) -> LossConfig {
        LossConfig { metric, margin: 1.0, temperature: 1.0 }
    }

    #[test]
    fn single_sample_identity_view_costs_margin() {
        let z = Matrix::from_rows(&[[0.3f32, -1.2, 0.7]]).unwrap();
        for metric in [Metric::SquaredEuclidean, Metric::Cosine] {
            for m in [1.0, 0.25] {
                let c = LossConfig { metric, margin: m, temperature: 1.0 };
                assert_eq!(clan_loss(&z, &z, &c).unwrap().value, m);
            }
        }
    }

    #[test]
    fn collapsed_positives_and_distant_negatives_cost_nothing() {
        let z = Matrix::from_rows(&[[0.0f32, 0.0], [0.0, 0.0]]).unwrap();
        let zt = Matrix::from_rows(&[[1.0f32, 0.5], [-2.0, 0.0]]).unwrap();
        let out = clan_loss(&z, &zt, &cfg(Metric::SquaredEuclidean)).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.grad_z.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn baseline_uniform_softmax_is_log_b() {
        let row = [0.5f32, -0.25, 1.0];
        for b in [1usize, 2, 5, 8] {
            let z = Matrix::from_rows(&vec![row; b]).unwrap();
            for metric in [Metric::SquaredEuclidean, Metric::Cosine] {
                let v = ntxent_baseline_loss(&z, &z, &cfg(metric)).unwrap().value;
                assert!((v - (b as f64).ln()).abs() < 1e-12, "b={b} {metric}: {v}");
            }
        }
    }

    #[test]
    fn baseline_single_sample_is_positive_distance_over_tau() {
        let z = Matrix::from_rows(&[[1.0f32, 2.0]]).unwrap();
        let zp = Matrix::from_rows(&[[0.0f32, 1.0]]).unwrap();
        let c = LossConfig { metric: Metric::SquaredEuclidean, margin: 1.0, temperature: 0.5 };
        assert!((ntxent_baseline_loss(&z, &zp, &c).unwrap().value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let c = cfg(Metric::Cosine);
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 3);
        assert!(matches!(clan_loss(&a, &b, &c), Err(ClanError::Dimension { .. })));
        assert!(matches!(clan_loss(&a, &a, &c), Err(ClanError::Degenerate { .. })));
        assert!(matches!(ntxent_baseline_loss(&a, &a, &c), Err(ClanError::Degenerate { .. })));
        let bad = LossConfig { margin: 1.5, ..c };
        let ok = Matrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        assert!(matches!(clan_loss(&ok, &ok, &bad), Err(ClanError::Config(_))));
    }

    #[test]
    fn monte_carlo_distance_tracks_centroid_distance() {
        // E‖z − s‖² = ‖z − μ‖² + qσ² for s ~ N(μ, σ²I)
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let q = 4;
        let sigma = 0.3;
        let mu = [0.5f32, -1.0, 2.0, 0.0];
        let za = [1.5f32, 0.0, 0.5, -1.0];
        let normal = Normal::new(0.0, sigma).unwrap();
        let k = 10_000;
        let mean: f64 = (0..k)
            .map(|_| {
                let s: Vec<f32> = mu.iter().map(|&m| m + normal.sample(&mut rng) as f32).collect();
                sq_euclidean(&za, &s)
            })
            .sum::<f64>()
            / k as f64;
        let expected = sq_euclidean(&za, &mu) + q as f64 * sigma * sigma;
        assert!((mean - expected).abs() / expected < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn unhinged_objective_matches_centroid_form() {
        // (1/B)Σ_a[Σ_p d(z_a,z_p) − Σ_n d(z_a,z̃_n)] under squared Euclidean
        // equals Σ_a‖z_a−z̄‖² − Σ_a‖z_a−z̃̄‖² + S(z) − S(z̃), S = scatter about the mean
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for b in 1..=4 {
            let z = random(b, 3, &mut rng);
            let zt = random(b, 3, &mut rng);
            let mut brute = 0.0;
            for a in 0..b {
                for p in 0..b {
                    brute += sq_euclidean(z.row(a), z.row(p)) - sq_euclidean(z.row(a), zt.row(p));
                }
            }
            brute /= b as f64;
            let zm: Vec<f32> = z.column_means().unwrap().iter().map(|&v| v as f32).collect();
            let tm: Vec<f32> = zt.column_means().unwrap().iter().map(|&v| v as f32).collect();
            let scatter = |m: &Matrix, c: &[f32]| m.row_iter().map(|r| sq_euclidean(r, c)).sum::<f64>();
            let closed = scatter(&z, &zm) - z.row_iter().map(|r| sq_euclidean(r, &tm)).sum::<f64>()
                + scatter(&z, &zm)
                - scatter(&zt, &tm);
            assert!((brute - closed).abs() < 1e-5 * (1.0 + brute.abs()), "b={b}: {brute} vs {closed}");
        }
    }

    #[test]
    fn loss_kind_parsing() {
        assert_eq!("clan".parse::<LossKind>().unwrap(), LossKind::Clan);
        assert_eq!("ntxent-baseline".parse::<LossKind>().unwrap(), LossKind::NtXentBaseline);
        assert!("triplet".parse::<LossKind>().is_err());
    }
}
