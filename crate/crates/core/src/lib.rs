//! Self-training with self-adaptive thresholding (SST).
//!
//! The crate implements the full desk-scale SST stack:
//!
//! - [`prob`] — softmax, label-smoothed cross-entropy, and the labeled /
//!   masked-unlabeled / combined losses;
//! - [`sat`] — self-adaptive per-class thresholds, pseudo-label assignment,
//!   high-confidence selection, and fixed-threshold baselines;
//! - [`model`] — a dense rectifier classifier with hand-derived gradients,
//!   an AdamW-style optimizer on a warmup + cosine schedule, checkpointing,
//!   and the EMA teacher update;
//! - [`data`] — synthetic generators, CSV ingestion, labeled/unlabeled
//!   splitting, and vector-space weak/strong augmentation;
//! - [`trainer`] — supervised initialization, the Super-SST cycle loop, the
//!   Semi-SST EMA-teacher loop, convergence, and teacher-to-student
//!   distillation.
//!
//! All numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`).
//! Experiments and the CLI use the `f64` aliases below.

pub mod data;
pub mod error;
pub mod model;
pub mod prob;
pub mod sat;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Convenience aliases for the default `f64` pipeline.
pub type ProbRow64 = prob::ProbRow<f64>;
pub type ProbMatrix64 = prob::ProbMatrix<f64>;
pub type ClassThresholds64 = sat::ClassThresholds<f64>;
pub type PseudoLabelSet64 = sat::PseudoLabelSet<f64>;
pub type Dataset64 = data::Dataset<f64>;
pub type Classifier64 = model::DenseClassifier<f64>;
pub type TrainerConfig64 = trainer::TrainerConfig<f64>;
pub type RunResult64 = trainer::RunResult<f64>;
pub type CycleReport64 = trainer::CycleReport<f64>;
