//! Seed derivation for independent random streams.
//!
//! Every stochastic run uses `ChaCha8Rng::seed_from_u64`. Replica `k` of an
//! experiment with master seed `m` is seeded with `derive_seed(m, k)`:
//!
//! ```text
//! mix(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!          z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!          z ^ (z >> 31)
//! derive_seed(m, k) = mix(m ^ mix(k + 0x9E3779B97F4A7C15))
//! ```
//!
//! with wrapping 64-bit arithmetic. `mix` is a bijection, so for a fixed master
//! distinct stream ids give distinct seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream.wrapping_add(GOLDEN)))
}

/// Generator for stream `stream` under `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
