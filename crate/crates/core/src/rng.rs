//! Seed derivation and RNG construction.
//!
//! Every random component in the crate is driven by a [`ChaCha8Rng`] seeded
//! from a 64-bit value. Sub-streams (one per tree, per permutation replicate,
//! ...) are derived with [`derive_seed`] so that they can be generated in any
//! order, or in parallel, and still reproduce bit-identically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th sub-stream of `master`: `mix64(mix64(master) ^ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
