//! Reproducible random streams.
//!
//! Every realization gets its own ChaCha stream selected by a 64-bit stream
//! id under a key derived from the master seed; white-noise channels within
//! a realization start at disjoint word offsets of that stream. Nothing
//! depends on thread scheduling or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Word offset between channels; far more than any single channel consumes.
const CHANNEL_STRIDE: u128 = 1 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub key: u64,
    pub stream: u64,
}

/// Stream of realization `index` under `master`. Injective in both arguments
/// for a fixed master seed.
pub fn seed_for(master: u64, index: u64) -> StreamSeed {
    StreamSeed { key: master, stream: index }
}

/// Stream for realization `index` at a scan point identified by its value,
/// so repeated values reproduce the same ensemble.
pub fn seed_for_value(master: u64, value: f64, index: u32) -> StreamSeed {
    let tag = splitmix64(value.to_bits()) & 0xffff_ffff_0000_0000;
    StreamSeed { key: master, stream: tag | u64::from(index) }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for white-noise channel `channel` of the given stream.
pub fn channel_rng(seed: StreamSeed, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.key);
    rng.set_stream(seed.stream);
    rng.set_word_pos(channel as u128 * CHANNEL_STRIDE);
    rng
}
