//! Deterministic stream derivation for seeded experiments.
//!
//! Every random draw in the crate derives its generator from a
//! (master seed, label, index) triple through this mixer, so independent
//! streams never share state and regeneration is exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Combines a seed with a stream label and an index into one well-mixed word.
pub fn derive(seed: u64, label: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(label)).wrapping_add(index))
}

/// A ChaCha generator for the derived stream.
pub fn rng(seed: u64, label: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, label, index))
}

/// Stream labels; disjoint by construction.
pub mod label {
    pub const BANDWIDTH: u64 = 1;
    pub const FEATURE: u64 = 2;
    pub const SYNTH_CHARS: u64 = 3;
    pub const SYNTH_NOISE: u64 = 4;
    pub const SYNTH_LAMBDA: u64 = 5;
    pub const VERIFY: u64 = 6;
}
