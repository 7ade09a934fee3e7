//! Derivation of independent sub-seeds from one master seed.
//!
//! `derive(master, purpose, index)` mixes the three inputs through
//! SplitMix64 finalizers, so every (purpose, index) pair gets a distinct,
//! reproducible stream. All randomness in the crate is drawn from
//! [`rng`] seeded this way.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived seed is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Init = 1,
    Shuffle = 2,
    Fold = 3,
    Synth = 4,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, purpose: Purpose, index: u64) -> u64 {
    mix(mix(mix(master) ^ purpose as u64) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
