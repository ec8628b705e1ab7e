//! Counter-based random streams.
//!
//! Every random quantity in an experiment is addressed by a tuple of
//! integers (seed, replicate, coefficient index, purpose). The tuple is mixed
//! with SplitMix64 into a ChaCha key, so a stream depends only on its address
//! and never on which worker thread asks for it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream purposes, kept distinct so that e.g. observation noise and
/// posterior draws never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Observation = 1,
    PosteriorDraw = 2,
    TruthSign = 3,
    Replicate = 4,
    Verify = 5,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of counters into one 64-bit key.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A ChaCha8 stream addressed by `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(&[seed, purpose as u64, a, b]))
}

/// One standard normal variate addressed by `(seed, purpose, a, b)`.
pub fn normal_at(seed: u64, purpose: Purpose, a: u64, b: u64) -> f64 {
    let mut rng = stream(seed, purpose, a, b);
    StandardNormal.sample(&mut rng)
}

/// Seed of replicate `r` derived from a run seed.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    mix(&[seed, Purpose::Replicate as u64, r])
}
