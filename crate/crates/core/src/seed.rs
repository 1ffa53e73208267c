//! Seed fan-out.
//!
//! Every randomized object is driven by a `ChaCha8Rng` whose seed is derived
//! from a master seed and a stream label with the SplitMix64 finalizer:
//!
//! ```text
//! derive(master, stream) = splitmix64(master ^ splitmix64(stream + 0x9E3779B97F4A7C15))
//! ```
//!
//! Derived seeds depend only on `(master, stream)`, never on how many draws
//! another stream has consumed, so parallel trials stay reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream labels used inside the library. Harness code picks its own labels
/// above `0x1000`.
pub mod stream {
    pub const RANGE_SKETCH: u64 = 1;
    pub const COUNT_SKETCH: u64 = 2;
    pub const MIX_SKETCH: u64 = 3;
    pub const SOURCES: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const GAINS: u64 = 6;
    pub const DOAS: u64 = 7;
    pub const LANCZOS_START: u64 = 8;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(GOLDEN)))
}

pub fn rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream))
}
