//! Deterministic RNG derivation.
//!
//! Every stochastic routine takes a `u64` master seed and derives
//! independent ChaCha streams from it, so results do not depend on the
//! order in which restarts, rounds, or grid cells execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha generator on stream `stream` of the cipher keyed by `master_seed`.
///
/// Streams with distinct indices never overlap, which makes
/// `(master_seed, k)` a reproducible per-task generator.
pub fn derive_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Mix a salt into a seed (one splitmix64 round).
///
/// Used to derive sub-seeds for nested scopes (discovery round within a
/// repetition within a grid cell) without threading RNG state through.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
