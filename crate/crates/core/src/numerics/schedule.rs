use std::f64::consts::PI;

use crate::error::{ClanError, Result};

/// Linear warm-up followed by a half-cosine decay to `final_lr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub final_lr: f64,
}

impl ScheduleConfig {
    /// Schedule whose warm-up covers `warmup_fraction` of `total_steps`.
    pub fn with_warmup_fraction(base_lr: f64, total_steps: usize, warmup_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&warmup_fraction) {
            return Err(ClanError::Config(format!(
                "warm-up fraction {warmup_fraction} outside [0, 1]"
            )));
        }
        let cfg = ScheduleConfig {
            base_lr,
            warmup_steps: (total_steps as f64 * warmup_fraction).round() as usize,
            total_steps,
            final_lr: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) || !self.base_lr.is_finite() {
            return Err(ClanError::Config(format!("base_lr {} must be positive", self.base_lr)));
        }
        if !(self.final_lr >= 0.0) {
            return Err(ClanError::Config(format!("final_lr {} must be non-negative", self.final_lr)));
        }
        if self.warmup_steps > self.total_steps {
            return Err(ClanError::Config(format!(
                "warmup_steps {} exceeds total_steps {}",
                self.warmup_steps, self.total_steps
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> Result<f64> {
        lr_at(self, step)
    }
}

pub fn lr_at(schedule: &ScheduleConfig, step: usize) -> Result<f64> {
    let s = schedule;
    if step > s.total_steps {
        return Err(ClanError::Range(format!(
            "step {step} beyond total_steps {}",
            s.total_steps
        )));
    }
    if step < s.warmup_steps {
        return Ok(s.base_lr * step as f64 / s.warmup_steps as f64);
    }
    let decay_steps = s.total_steps - s.warmup_steps;
    if decay_steps == 0 {
        return Ok(s.base_lr);
    }
    let progress = (step - s.warmup_steps) as f64 / decay_steps as f64;
    Ok(s.final_lr + (s.base_lr - s.final_lr) * 0.5 * (1.0 + (PI * progress).cos()))
}
