//! Synthetic multimodal benchmark: dataset generation, fusion training,
//! and evaluation metrics.

pub mod metrics;
pub mod synth;
pub mod train;
