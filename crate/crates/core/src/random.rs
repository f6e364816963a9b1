//! Seeded random streams.
//!
//! Every run uses ChaCha8 keyed by the 64-bit seed, with one stream per
//! consumer so that adding draws in one agent never shifts another's.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENVIRONMENT_STREAM: u64 = 0;
pub const SENDER_STREAM: u64 = 1;
pub const RECEIVER_STREAM: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index from nonnegative `weights` summing to one.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding left the tail uncovered: last index with positive weight
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .unwrap_or(weights.len() - 1)
}
