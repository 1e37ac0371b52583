//! Independent reference implementations used as test oracles. Everything
//! here is written in plain f64 loops and shares no code with the library.

#![allow(dead_code)]

use clan::model::MlpParams;
use clan::numerics::{Matrix, Metric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f32) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn to_f64(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

pub fn matmul_oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

/// Layer weights promoted to f64: `(W[fan_in][fan_out], b[fan_out])`.
pub type Layers64 = Vec<(Vec<Vec<f64>>, Vec<f64>)>;

pub fn layers_f64(params: &MlpParams) -> Layers64 {
    params
        .layers
        .iter()
        .map(|l| (to_f64(&l.weight), l.bias.as_slice().iter().map(|&v| v as f64).collect()))
        .collect()
}

/// Forward pass of one sample; ReLU after every layer but the last. Also
/// returns every pre-activation value for kink detection.
pub fn forward_row(layers: &Layers64, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut h = x.to_vec();
    let mut pre_all = Vec::new();
    for (li, (w, b)) in layers.iter().enumerate() {
        let mut pre = b.clone();
        for (i, &hi) in h.iter().enumerate() {
            for (j, p) in pre.iter_mut().enumerate() {
                *p += hi * w[i][j];
            }
        }
        pre_all.extend_from_slice(&pre);
        h = if li + 1 < layers.len() { pre.iter().map(|&v| v.max(0.0)).collect() } else { pre };
    }
    (h, pre_all)
}

pub fn forward_oracle(layers: &Layers64, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter().map(|r| forward_row(layers, r).0).collect()
}

pub fn distance_oracle(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            1.0 - dot / (na * nb)
        }
    }
}

/// Direct double loop over anchors, positives and negatives.
pub fn clan_loss_oracle(metric: Metric, margin: f64, z: &[Vec<f64>], zt: &[Vec<f64>]) -> f64 {
    let b = z.len();
    let mut total = 0.0;
    for a in 0..b {
        for p in 0..b {
            if p != a {
                total += distance_oracle(metric, &z[a], &z[p]);
            }
        }
        for n in 0..b {
            total += (margin - distance_oracle(metric, &z[a], &zt[n])).max(0.0);
        }
    }
    total / b as f64
}

pub fn ntxent_loss_oracle(metric: Metric, tau: f64, z: &[Vec<f64>], zp: &[Vec<f64>]) -> f64 {
    let b = z.len();
    let mut total = 0.0;
    for a in 0..b {
        let num = (-distance_oracle(metric, &z[a], &zp[a]) / tau).exp();
        let den: f64 = (0..b).map(|j| (-distance_oracle(metric, &z[a], &z[j]) / tau).exp()).sum();
        total -= (num / den).ln();
    }
    total / b as f64
}

/// Smallest `|m − d(z_a, z̃_n)|` over all anchor/negative pairs.
pub fn min_hinge_slack(metric: Metric, margin: f64, z: &[Vec<f64>], zt: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in z {
        for n in zt {
            best = best.min((margin - distance_oracle(metric, a, n)).abs());
        }
    }
    best
}

/// Counts every (positive, negative) pair: wins score 1, ties ½.
pub fn auroc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..scores.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// One AdamW update of a scalar parameter, returning `(θ, m, v)`.
#[allow(clippy::too_many_arguments)]
pub fn adamw_scalar(theta: f64, g: f64, m: f64, v: f64, t: u64, lr: f64, wd: f64) -> (f64, f64, f64) {
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let m = b1 * m + (1.0 - b1) * g;
    let v = b2 * v + (1.0 - b2) * g * g;
    let mh = m / (1.0 - b1.powi(t as i32));
    let vh = v / (1.0 - b2.powi(t as i32));
    let theta = theta * (1.0 - lr * wd) - lr * mh / (vh.sqrt() + eps);
    (theta, m, v)
}

/// Which objective a gradient check exercises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Clan { margin: f64 },
    NtXent { temperature: f64 },
}

/// A small random encoder plus two input batches.
#[derive(Debug, Clone)]
pub struct GradInstance {
    pub config: clan::model::MlpConfig,
    pub metric: Metric,
    pub objective: Objective,
    pub x: Matrix,
    pub x_other: Matrix,
}

impl GradInstance {
    pub fn random(rng: &mut ChaCha8Rng, objective_pick: u8) -> Self {
        let latent_width = rng.random_range(2..=4);
        let config = clan::model::MlpConfig {
            input_width: rng.random_range(2..=8),
            hidden_width: rng.random_range(latent_width + 1..=16),
            hidden_layers: rng.random_range(1..=2),
            latent_width,
            seed: rng.random(),
        };
        let metric = if rng.random_bool(0.5) { Metric::Cosine } else { Metric::SquaredEuclidean };
        let objective = if objective_pick % 2 == 0 {
            Objective::Clan { margin: rng.random_range(0.2..=1.0) }
        } else {
            Objective::NtXent { temperature: rng.random_range(0.5..2.0) }
        };
        let b = rng.random_range(1..=6);
        let x = random_matrix(rng, b, config.input_width, 1.0);
        let x_other = random_matrix(rng, b, config.input_width, 1.0);
        GradInstance { config, metric, objective, x, x_other }
    }

    pub fn loss_oracle(&self, layers: &Layers64) -> f64 {
        let z = forward_oracle(layers, &to_f64(&self.x));
        let zo = forward_oracle(layers, &to_f64(&self.x_other));
        match self.objective {
            Objective::Clan { margin } => clan_loss_oracle(self.metric, margin, &z, &zo),
            Objective::NtXent { temperature } => ntxent_loss_oracle(self.metric, temperature, &z, &zo),
        }
    }

    /// Distance from the nearest non-smooth or ill-conditioned point: ReLU
    /// and hinge kinks, and under the cosine metric small latent norms and
    /// near-parallel latent pairs.
    pub fn kink_clearance(&self, layers: &Layers64) -> f64 {
        let mut best = f64::INFINITY;
        let n_last = layers.last().unwrap().1.len();
        for x in [&self.x, &self.x_other] {
            for r in to_f64(x) {
                let (_, pre) = forward_row(layers, &r);
                // the last layer has no ReLU
                for &p in &pre[..pre.len() - n_last] {
                    best = best.min(p.abs());
                }
            }
        }
        let z = forward_oracle(layers, &to_f64(&self.x));
        let zo = forward_oracle(layers, &to_f64(&self.x_other));
        if let Objective::Clan { margin } = self.objective {
            best = best.min(min_hinge_slack(self.metric, margin, &z, &zo));
        }
        if self.metric == Metric::Cosine {
            let all: Vec<&Vec<f64>> = z.iter().chain(&zo).collect();
            for (i, a) in all.iter().enumerate() {
                best = best.min(a.iter().map(|v| v * v).sum::<f64>().sqrt() * 1e-2);
                for b in &all[i + 1..] {
                    best = best.min(distance_oracle(Metric::Cosine, a, b));
                }
            }
        }
        best
    }
}

/// Analytic and central-difference gradients, flattened in parameter order.
pub fn gradient_pair(inst: &GradInstance, params: &MlpParams) -> (Vec<f64>, Vec<f64>) {
    use clan::loss::{LossConfig, LossKind};
    use clan::model::{backward, forward};

    let (kind, cfg) = match inst.objective {
        Objective::Clan { margin } => {
            (LossKind::Clan, LossConfig { metric: inst.metric, margin, temperature: 1.0 })
        }
        Objective::NtXent { temperature } => {
            (LossKind::NtXentBaseline, LossConfig { metric: inst.metric, margin: 1.0, temperature })
        }
    };
    let (z, cache) = forward(params, &inst.x).unwrap();
    let (zo, cache_o) = forward(params, &inst.x_other).unwrap();
    let out = kind.evaluate(&z, &zo, &cfg).unwrap();
    let mut g = backward(params, &cache, &out.grad_z).unwrap();
    g.add_assign(&backward(params, &cache_o, &out.grad_other).unwrap()).unwrap();
    let analytic: Vec<f64> =
        g.tensors().iter().flat_map(|t| t.as_slice().iter().map(|&v| v as f64)).collect();

    let base = layers_f64(params);
    let h = 1e-6;
    let mut numeric = Vec::with_capacity(analytic.len());
    for li in 0..base.len() {
        let (rows, cols) = (base[li].0.len(), base[li].1.len());
        for i in 0..rows {
            for j in 0..cols {
                let mut plus = base.clone();
                plus[li].0[i][j] += h;
                let mut minus = base.clone();
                minus[li].0[i][j] -= h;
                numeric.push((inst.loss_oracle(&plus) - inst.loss_oracle(&minus)) / (2.0 * h));
            }
        }
        for j in 0..cols {
            let mut plus = base.clone();
            plus[li].1[j] += h;
            let mut minus = base.clone();
            minus[li].1[j] -= h;
            numeric.push((inst.loss_oracle(&plus) - inst.loss_oracle(&minus)) / (2.0 * h));
        }
    }
    (analytic, numeric)
}

/// Largest elementwise `|a − n| / max(|a|, |n|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
