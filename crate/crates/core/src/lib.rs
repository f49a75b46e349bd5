//! Adaptive label smoothing for mini-batch training on graphs.
//!
//! The crate covers the full pipeline: sparse graph kernels, dataset
//! ingestion and synthetic generation, label propagation, sub-graph
//! samplers, the smoothing objectives with exact gradients, a small GCN/MLP
//! with hand-written backpropagation, bias and confidence metrics, and an
//! experiment harness.

pub mod data;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod propagation;
pub mod rng;
pub mod sampling;
pub mod smoothing;

pub use error::{Error, Result};
