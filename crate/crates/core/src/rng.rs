//! Seeded random streams.
//!
//! Every consumer draws from a ChaCha8 generator keyed by the run seed, with
//! the stream number derived from a purpose label via 64-bit FNV-1a. Streams
//! for different purposes are independent, and the same `(purpose, seed)`
//! pair yields the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// 64-bit FNV-1a hash of `label`.
pub fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for `(purpose, seed)`.
pub fn stream(purpose: &str, seed: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(purpose));
    rng
}
