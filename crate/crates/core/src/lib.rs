//! Contrastive pretraining of a flow-feature encoder on benign traffic, and
//! constant-time intrusion scoring against the benign latent centroid.
//!
//! The encoder is trained with augmented views as *negatives*: per-feature
//! uniform resampling manufactures surrogate malicious traffic, original
//! latents are pulled together, and augmented latents are pushed beyond a
//! margin. After training, the mean benign latent is cached and a sample is
//! scored by a single distance to it.
//!
//! Module map:
//!
//! - [`numerics`]: matrices, distances, AdamW, warm-up cosine schedule
//! - [`model`]: the MLP encoder, its backward pass and checkpoint file
//! - [`augmentation`]: uniform-resampling negative views
//! - [`loss`]: the margin contrastive objective and the NT-Xent style baseline
//! - [`pipeline`]: CSV ingestion, scaling, stratified splits, batching
//! - [`inference`]: centroid cache, probability scoring, nearest-neighbour reference
//! - [`trainer`]: pretraining and low-shot fine-tuning
//! - [`eval`]: AUROC, macro-F1, reports, synthetic data and the timing bench
//! - [`cli`]: the `clan` command line

pub mod augmentation;
pub mod cli;
pub mod error;
pub mod eval;
mod format;
pub mod inference;
pub mod loss;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod trainer;

pub use error::{ClanError, Result};
pub use format::{FileKind, FORMAT_VERSION, MAGIC};
