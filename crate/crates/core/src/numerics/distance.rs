use std::fmt;
use std::str::FromStr;

use crate::error::{ClanError, Result};
use crate::numerics::matrix::{dot, Matrix};

/// Latent-space distance used for training and inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    SquaredEuclidean,
    #[default]
    Cosine,
}

impl Metric {
    /// Stable integer tag used in checkpoint and centroid files.
    pub fn tag(self) -> u32 {
        match self {
            Metric::SquaredEuclidean => 0,
            Metric::Cosine => 1,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Metric> {
        match tag {
            0 => Some(Metric::SquaredEuclidean),
            1 => Some(Metric::Cosine),
            _ => None,
        }
    }

    pub fn distance(self, a: &[f32], b: &[f32]) -> Result<f64> {
        match self {
            Metric::SquaredEuclidean => Ok(sq_euclidean(a, b)),
            Metric::Cosine => cosine_distance(a, b),
        }
    }

    /// Distance and its gradients with respect to both arguments.
    pub fn distance_with_grad(self, a: &[f32], b: &[f32]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        match self {
            Metric::SquaredEuclidean => {
                let ga: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| 2.0 * (x as f64 - y as f64)).collect();
                let gb = ga.iter().map(|g| -g).collect();
                Ok((sq_euclidean(a, b), ga, gb))
            }
            Metric::Cosine => {
                let na = norm_sq(a);
                let nb = norm_sq(b);
                if na == 0.0 || nb == 0.0 {
                    return Err(ClanError::degenerate("cosine distance", "zero-norm row"));
                }
                let (la, lb) = (na.sqrt(), nb.sqrt());
                let ab = dot(a, b);
                let sim = ab / (na * nb).sqrt();
                // d = 1 - a·b/(|a||b|);  ∂d/∂a = -(b/(|a||b|) - sim·a/|a|²)
                let ga = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| -(y as f64 / (la * lb) - sim * x as f64 / na))
                    .collect();
                let gb = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| -(x as f64 / (la * lb) - sim * y as f64 / nb))
                    .collect();
                Ok(((1.0 - sim).clamp(0.0, 2.0), ga, gb))
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::SquaredEuclidean => "squared_euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = ClanError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "squared_euclidean" | "sq_euclidean" | "euclidean" => Ok(Metric::SquaredEuclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(ClanError::Config(format!("unknown metric `{other}`"))),
        }
    }
}

#[inline]
pub fn norm_sq(a: &[f32]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn sq_euclidean(a: &[f32], b: &[f32]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let i = c * 4 + l;
            let d = a[i] as f64 - b[i] as f64;
            lanes[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        tail += d * d;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    if na == 0.0 || nb == 0.0 {
        return Err(ClanError::degenerate("cosine distance", "zero-norm row"));
    }
    // sqrt(na*nb) rather than sqrt(na)*sqrt(nb): identical rows give exactly 1
    Ok((1.0 - dot(a, b) / (na * nb).sqrt()).clamp(0.0, 2.0))
}

pub fn pairwise_sq_euclidean(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_widths("pairwise_sq_euclidean", a, b)?;
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out.set(i, j, sq_euclidean(a.row(i), b.row(j)) as f32);
        }
    }
    Ok(out)
}

pub fn pairwise_cosine_distance(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_widths("pairwise_cosine_distance", a, b)?;
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out.set(i, j, cosine_distance(a.row(i), b.row(j))? as f32);
        }
    }
    Ok(out)
}

pub fn pairwise_distance(metric: Metric, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    match metric {
        Metric::SquaredEuclidean => pairwise_sq_euclidean(a, b),
        Metric::Cosine => pairwise_cosine_distance(a, b),
    }
}

fn check_widths(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(ClanError::dim(op, format!("widths {} and {}", a.cols(), b.cols())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f32]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn sq_euclidean_examples() {
        let a = m(&[&[1.0, 0.0]]);
        assert_eq!(pairwise_sq_euclidean(&a, &a).unwrap().as_slice(), &[0.0]);
        assert_eq!(pairwise_sq_euclidean(&a, &m(&[&[0.0, 1.0]])).unwrap().as_slice(), &[2.0]);
        let d = pairwise_sq_euclidean(&m(&[&[1.0, 2.0, 3.0]]), &m(&[&[4.0, 5.0, 6.0]])).unwrap();
        assert_eq!(d.as_slice(), &[27.0]);
    }

    #[test]
    fn cosine_examples() {
        let e1 = m(&[&[1.0, 0.0]]);
        assert_eq!(pairwise_cosine_distance(&e1, &e1).unwrap().as_slice(), &[0.0]);
        assert_eq!(pairwise_cosine_distance(&e1, &m(&[&[0.0, 1.0]])).unwrap().as_slice(), &[1.0]);
        assert_eq!(pairwise_cosine_distance(&e1, &m(&[&[-1.0, 0.0]])).unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn cosine_of_identical_rows_is_exactly_zero() {
        let v = [0.3f32, -1.7, 2.2, 0.01, 5.0];
        assert_eq!(cosine_distance(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn cosine_zero_norm_is_degenerate() {
        let z = m(&[&[0.0, 0.0]]);
        let e = m(&[&[1.0, 0.0]]);
        assert!(matches!(
            pairwise_cosine_distance(&z, &e),
            Err(ClanError::Degenerate { .. })
        ));
    }

    #[test]
    fn width_mismatch() {
        assert!(pairwise_sq_euclidean(&Matrix::zeros(1, 2), &Matrix::zeros(1, 3)).is_err());
        assert!(pairwise_cosine_distance(&Matrix::zeros(1, 2), &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn metric_tags_round_trip() {
        for metric in [Metric::SquaredEuclidean, Metric::Cosine] {
            assert_eq!(Metric::from_tag(metric.tag()), Some(metric));
            assert_eq!(metric.to_string().parse::<Metric>().unwrap(), metric);
        }
        assert_eq!(Metric::from_tag(7), None);
    }
}
