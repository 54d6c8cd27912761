//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a `Xoshiro256PlusPlus`
//! generator whose 256-bit state is filled from a 64-bit seed by SplitMix64
//! (`SeedableRng::seed_from_u64`). Independent streams are derived with
//! [`stream_seed`], so a restart's randomness depends only on
//! `(master_seed, index)` and never on scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th child stream of `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn child_rng(master: u64, index: u64) -> StreamRng {
    rng_from_seed(stream_seed(master, index))
}
