//! Counter-keyed random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from
//! (master_seed, drop, replicate, tag), so any replicate is reproducible in
//! isolation and the parallel execution order cannot affect results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for per-drop randomness (user placement).
pub const TAG_DROP: u32 = 0;
/// Stream tag for per-replicate randomness (channels, then phases).
pub const TAG_REPLICATE: u32 = 1;

/// Independent RNG stream for one (master_seed, drop, replicate, tag) tuple.
pub fn stream(master_seed: u64, drop: u64, replicate: u64, tag: u32) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&drop.to_le_bytes());
    seed[16..24].copy_from_slice(&replicate.to_le_bytes());
    seed[24..28].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
