//! Seed derivation.
//!
//! Every random stream in the toolkit descends from one user-supplied seed.
//! Streams are separated by a counter: `sub_seed(master, k)` is the SplitMix64
//! output for state `master + k * GOLDEN`, so distinct counters give
//! decorrelated 64-bit seeds while staying reproducible on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives the seed of stream `counter` from `master`.
pub fn sub_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator used for every stochastic step in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
