//! Seed derivation.
//!
//! Every random decision in the crate draws from a stream keyed by the run
//! seed plus a path of integer indices (epoch, instance, cell, ...). Streams
//! are independent of evaluation order, so a run is a pure function of its
//! seed regardless of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a seed and an index path into a single 64-bit key.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// A ChaCha stream keyed by `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}

/// A uniform in `[0, 1)` that depends only on `(seed, path)`.
pub fn unit_uniform(seed: u64, path: &[u64]) -> f64 {
    (derive(seed, path) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// Stream tags so different consumers of the same seed never collide.
pub(crate) mod tag {
    pub const INIT: u64 = 1;
    pub const FEATURES: u64 = 2;
    pub const MASK: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const ACTIONS: u64 = 5;
    pub const REWARD_CLASSES: u64 = 6;
    pub const NEG_SAMPLE: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const PROTOTYPES: u64 = 9;
}
