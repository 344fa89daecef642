//! Seeded random streams.
//!
//! Every random quantity in the crate comes from ChaCha8 keyed by a 64-bit
//! seed, with a stream id separating independent uses of the same seed
//! (problem data vs. starting points). Uniform draws take the top 53 bits
//! of a `u64`, so values are identical on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STREAM_PROBLEM: u64 = 0;
pub const STREAM_START: u64 = 1;
pub const STREAM_VALIDATION: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `[lo, hi)`.
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}
