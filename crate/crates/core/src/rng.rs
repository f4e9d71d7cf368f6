//! Deterministic random-stream derivation.
//!
//! Every random decision in the crate draws from a [`ChaCha8Rng`] whose seed
//! is derived from a root seed plus a list of integer coordinates (image
//! index, region id, epoch number, ...). Streams for different coordinates
//! are independent, and the same coordinates always reproduce the same
//! stream, regardless of evaluation order or thread count. That is what
//! makes dataset generation and training shuffles bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 output function. Good avalanche behaviour,
/// cheap, and stable across platforms.
#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`, one mixing round per component.
pub fn mix_key(seed: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// A ChaCha8 stream keyed by `(seed, parts)`.
pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_key(seed, parts))
}
