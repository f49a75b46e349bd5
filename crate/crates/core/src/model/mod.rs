//! GCN / MLP classifiers with hand-written reverse mode, Adam, and SIGN
//! feature precomputation.

mod adam;
mod network;
mod sign;

pub use adam::{adam_step, AdamConfig, OptState};
pub use network::{backward, forward, Arch, ForwardCache, Layer, ModelConfig, ModelGrads, ModelParams};
pub use sign::sign_precompute;
