//! AdamW with decoupled weight decay.

use crate::error::{ClanError, Result};
use crate::numerics::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct AdamWState {
    pub first_moment: Vec<Matrix>,
    pub second_moment: Vec<Matrix>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamWState {
    /// Fresh state with zero moments for parameters of the given shapes.
    pub fn new(shapes: &[(usize, usize)], weight_decay: f64) -> Self {
        AdamWState {
            first_moment: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second_moment: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
        }
    }

    pub fn for_params(params: &[&Matrix], weight_decay: f64) -> Self {
        let shapes: Vec<_> = params.iter().map(|p| p.shape()).collect();
        Self::new(&shapes, weight_decay)
    }
}

/// One AdamW update of every parameter tensor in place.
///
/// Weight decay is applied as `θ ← θ·(1 − lr·wd)` before the bias-corrected
/// Adam delta.
pub fn adamw_step(
    params: &mut [&mut Matrix],
    grads: &[&Matrix],
    state: &mut AdamWState,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(ClanError::dim(
            "adamw_step",
            format!(
                "{} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.first_moment.len()
            ),
        ));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first_moment[i].shape() {
            return Err(ClanError::dim(
                "adamw_step",
                format!(
                    "tensor {i}: param {:?}, grad {:?}, moment {:?}",
                    p.shape(),
                    g.shape(),
                    state.first_moment[i].shape()
                ),
            ));
        }
    }
    if !(lr >= 0.0) {
        return Err(ClanError::Range(format!("learning rate {lr} must be non-negative")));
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps, wd) = (state.beta1, state.beta2, state.epsilon, state.weight_decay);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let decay = 1.0 - lr * wd;

    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = state.first_moment[i].as_mut_slice();
        let v = state.second_moment[i].as_mut_slice();
        for (((theta, &grad), m), v) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
            let grad = grad as f64;
            let m_new = b1 * *m as f64 + (1.0 - b1) * grad;
            let v_new = b2 * *v as f64 + (1.0 - b2) * grad * grad;
            *m = m_new as f32;
            *v = v_new as f32;
            let m_hat = m_new / bc1;
            let v_hat = v_new / bc2;
            let updated = *theta as f64 * decay - lr * m_hat / (v_hat.sqrt() + eps);
            *theta = updated as f32;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_is_a_fixed_point() {
        let mut p = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let before = p.clone();
        let g = Matrix::zeros(2, 2);
        let mut state = AdamWState::for_params(&[&p], 0.0);
        for _ in 0..5 {
            adamw_step(&mut [&mut p], &[&g], &mut state, 0.1).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(state.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Matrix::from_rows(&[[1.0]]).unwrap();
        let g = Matrix::from_rows(&[[2.0]]).unwrap();
        let mut state = AdamWState::for_params(&[&p], 0.0);
        adamw_step(&mut [&mut p], &[&g], &mut state, 0.1).unwrap();
        assert!((p.get(0, 0) - 0.9).abs() < 1e-3);
    }

    #[test]
    fn decoupled_decay_scales_before_delta() {
        let mut p = Matrix::from_rows(&[[2.0]]).unwrap();
        let g = Matrix::zeros(1, 1);
        let mut state = AdamWState::for_params(&[&p], 0.5);
        adamw_step(&mut [&mut p], &[&g], &mut state, 0.1).unwrap();
        assert!((p.get(0, 0) - 2.0 * (1.0 - 0.05)).abs() < 1e-7);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Matrix::zeros(2, 2);
        let g = Matrix::zeros(2, 3);
        let mut state = AdamWState::new(&[(2, 2)], 0.0);
        assert!(adamw_step(&mut [&mut p], &[&g], &mut state, 0.1).is_err());
        assert_eq!(state.step_count, 0);
    }
}
