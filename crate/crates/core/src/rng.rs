//! Seeded random streams. Every stochastic operation takes an explicit seed
//! and draws from its own ChaCha stream so reruns are bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a base seed with a tag so independent consumers never share a
/// stream (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod tags {
    pub const SPAN_CHANNEL: u64 = 0x11;
    pub const SPAN_NOISE: u64 = 0x12;
    pub const PHASE_NOISE: u64 = 0x13;
    pub const QAM_SYMBOLS: u64 = 0x14;
}
