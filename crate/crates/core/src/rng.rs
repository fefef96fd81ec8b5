//! Deterministic seed derivation.
//!
//! Every stochastic component derives its own stream from the experiment
//! master seed plus a list of integer tags (iteration, member index, ...).
//! Two runs with the same config therefore consume identical random streams
//! regardless of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and an ordered tag list.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut acc = mix(base);
    for (i, &t) in tags.iter().enumerate() {
        acc = mix(acc ^ t.wrapping_add(0x100 * (i as u64 + 1)));
    }
    acc
}

/// Fresh deterministic generator for a derived stream.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
