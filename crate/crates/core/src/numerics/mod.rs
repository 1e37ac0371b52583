//! Dense kernels, latent distances, the AdamW step and the learning-rate schedule.

pub mod distance;
pub mod matrix;
pub mod optim;
pub mod schedule;

pub use distance::{
    cosine_distance, pairwise_cosine_distance, pairwise_distance, pairwise_sq_euclidean,
    sq_euclidean, Metric,
};
pub use matrix::{dot, matmul, matmul_nt, matmul_tn, Matrix};
pub use optim::{adamw_step, AdamWState};
pub use schedule::{lr_at, ScheduleConfig};
