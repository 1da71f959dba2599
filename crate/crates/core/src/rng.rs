//! Seed derivation. Every random stream in the crate comes from one top-level
//! seed plus a fixed tag sequence, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed: `splitmix64(splitmix64(seed) ^ tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

/// Derives a child seed from a path of tags.
pub fn derive_seed_path(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |s, &t| derive_seed(s, t))
}

pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed_path(seed, tags))
}

/// Stream tags used by the pipeline stages.
pub mod tags {
    pub const SCENE: u64 = 1;
    pub const CORRUPT: u64 = 2;
    pub const FOLDS: u64 = 3;
    pub const RF: u64 = 4;
    pub const GBDT: u64 = 5;
    pub const VALIDATION: u64 = 6;
    pub const IMPORTANCE: u64 = 7;
}
