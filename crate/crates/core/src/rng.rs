//! Deterministic seed derivation for per-candidate generator streams.
//!
//! Every sampling site takes an explicit seed; batched work derives one
//! stream per (master seed, index) pair so parallel evaluation cannot change
//! results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream))
}

/// Seeded generator used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
