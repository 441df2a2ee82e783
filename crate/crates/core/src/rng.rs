//! Counter-based random streams: one independent ChaCha stream per replicate.
//!
//! Every stochastic result is a pure function of `(seed, replicate)`, so
//! replicates may be distributed over any number of workers and merged by
//! index afterwards.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub type StreamRng = ChaCha8Rng;

pub fn replicate_rng(seed: u64, replicate: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Stream for a named sub-experiment of a check, kept disjoint from the
/// plain replicate streams of the same seed.
pub fn substream_rng(seed: u64, tag: u64, replicate: u64) -> StreamRng {
    let mixed = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    replicate_rng(mixed, replicate)
}

/// Uniform variate on `(0, 1]`.
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Unit exponential variate.
#[inline]
pub fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}
