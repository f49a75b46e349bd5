//! Seed splitting.
//!
//! Every random draw in the crate comes from a stream derived from one
//! 64-bit experiment seed plus a path of counters (component tag, epoch,
//! batch index, ...). Streams for distinct paths are independent, so the
//! order in which components draw never affects another component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Component tags used as the first element of a stream path.
pub mod tag {
    pub const SBM_EDGES: u64 = 0x10;
    pub const SBM_FEATURES: u64 = 0x11;
    pub const SBM_SPLITS: u64 = 0x12;
    pub const PARTITION: u64 = 0x20;
    pub const CLUSTER_SHUFFLE: u64 = 0x21;
    pub const RANDOM_WALK: u64 = 0x22;
    pub const NEIGHBOR: u64 = 0x23;
    pub const RANDOM_NODES: u64 = 0x24;
    pub const MODEL_INIT: u64 = 0x30;
    pub const REFINEMENT_INIT: u64 = 0x31;
    pub const DROPOUT: u64 = 0x32;
    pub const SAMPLER: u64 = 0x40;
    pub const TRAIN_STEP: u64 = 0x41;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the 64-bit key for `seed` along `path`.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the stream identified by `seed` and `path`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut bytes = [0u8; 32];
    let mut k = derive_key(seed, path);
    for chunk in bytes.chunks_mut(8) {
        k = splitmix64(k);
        chunk.copy_from_slice(&k.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
