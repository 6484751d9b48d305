//! Seeded randomness.
//!
//! Every consumer draws from its own ChaCha stream selected by a stable
//! string label, so the values one component sees do not depend on how many
//! numbers another component consumed before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed(seed)
    }

    /// Opens the sub-stream keyed by `label`.
    pub fn stream(&self, label: &str) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(label_key(label));
        rng
    }

    /// Derives an independent child seed, e.g. one per repetition.
    pub fn derive(&self, label: &str) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ label_key(label)))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

// FNV-1a; stable across builds and platforms.
fn label_key(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
