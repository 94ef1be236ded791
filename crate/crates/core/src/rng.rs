//! Seed derivation.
//!
//! All randomness flows from a single 64-bit master seed through named
//! substreams (`"bootstrap"`, `"tree"`, `"corruption"`, ...). A substream seed
//! depends only on `(master, name, index)`, so work items can be scheduled on
//! any number of threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for byte in stream.bytes() {
        h = splitmix64(h ^ u64::from(byte));
    }
    splitmix64(h ^ splitmix64(index))
}

pub fn stream_rng(master: u64, stream: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
