use crate::error::{ClanError, Result};
use crate::format::{Reader, Writer};
use crate::numerics::Matrix;

/// Per-feature min-max scaler onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub min: Vec<f32>,
    pub max: Vec<f32>,
}

impl Scaler {
    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    pub(crate) fn write_to<W: std::io::Write>(&self, w: &mut Writer<W>) -> Result<()> {
        w.tensor(&Matrix::from_vec(1, self.min.len(), self.min.clone())?)?;
        w.tensor(&Matrix::from_vec(1, self.max.len(), self.max.clone())?)
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, n_features: usize) -> Result<Self> {
        let min = r.tensor()?;
        let max = r.tensor()?;
        if min.shape() != (1, n_features) || max.shape() != (1, n_features) {
            return Err(ClanError::ShapeMismatch(format!(
                "scaler tensors {:?}/{:?} for {n_features} features",
                min.shape(),
                max.shape()
            )));
        }
        let s = Scaler { min: min.into_vec(), max: max.into_vec() };
        if s.min.iter().zip(&s.max).any(|(lo, hi)| !(hi >= lo)) {
            return Err(ClanError::CorruptCheckpoint("scaler has max < min".into()));
        }
        Ok(s)
    }
}

pub fn fit_scaler(train_features: &Matrix) -> Result<Scaler> {
    if train_features.rows() == 0 {
        return Err(ClanError::Empty("cannot fit a scaler on zero rows".into()));
    }
    let mut min = train_features.row(0).to_vec();
    let mut max = min.clone();
    for r in train_features.row_iter().skip(1) {
        for (j, &v) in r.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(Scaler { min, max })
}

/// Maps each feature linearly so the fitted min goes to -1 and the max to +1.
/// Constant features map to 0. Values outside the fitted range extrapolate.
pub fn apply_scaler(scaler: &Scaler, features: &Matrix) -> Result<Matrix> {
    if features.cols() != scaler.n_features() {
        return Err(ClanError::dim(
            "apply_scaler",
            format!("{} columns, scaler fitted on {}", features.cols(), scaler.n_features()),
        ));
    }
    let mut out = features.clone();
    let cols = features.cols();
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        let j = k % cols;
        let (lo, hi) = (scaler.min[j] as f64, scaler.max[j] as f64);
        *v = if hi > lo { (2.0 * (*v as f64 - lo) / (hi - lo) - 1.0) as f32 } else { 0.0 };
    }
    Ok(out)
}
