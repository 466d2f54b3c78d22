//! Seeded randomness.
//!
//! Every stochastic routine takes an explicit seed and builds a
//! [`ChaCha8Rng`], a counter-based stream cipher generator, from it. Child
//! seeds are derived with SplitMix64 so that independent sub-streams never
//! overlap in practice.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Name of the generator, echoed into run reports.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha), seeded via seed_from_u64";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `seed ^ stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
