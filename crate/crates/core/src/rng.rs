//! Deterministic seeding helpers.
//!
//! Every randomized component in the toolkit draws from ChaCha8, a
//! counter-based stream generator: the same 64-bit seed produces the same
//! sequence on every platform and in every run. Independent substreams
//! (one per replication, per content, per trial, ...) are derived by
//! mixing the base seed with a stream index through SplitMix64, so
//! substreams stay decorrelated and insensitive to consumption order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The toolkit-wide deterministic generator.
pub type SeededRng = ChaCha8Rng;

/// Creates the generator for `seed`.
pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Derives the seed of substream `index` from a base seed.
pub fn substream(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
