//! Seeded random streams.
//!
//! All randomness in a run flows from one `u64` seed. Stages draw from
//! distinct ChaCha streams of that seed, identified by [`StreamId`] tags.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream-number bases for the pipeline stages.
pub struct StreamId;

impl StreamId {
    pub const SAMPLER: u64 = 0;
    pub const PREDICT: u64 = 1 << 32;
    pub const MULTISTART: u64 = 2 << 32;
    pub const SYNTHETIC: u64 = 3 << 32;
    pub const CHAINS: u64 = 4 << 32;
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// SplitMix64 step; used to derive independent seeds for replicated runs.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
