//! Seeded randomness.
//!
//! Every random draw in the crate (weight init, shuffles, landmark choice,
//! simulators) comes from [`ChaCha8Rng`]. Independent consumers derive their
//! own stream from the global seed with [`stream`], so adding draws in one
//! place never perturbs another.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn permutation(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

/// Well-known stream ids, kept in one place so they never collide.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const MSR_SHUFFLE: u64 = 3;
    pub const MSR_RESTART: u64 = 4;
    pub const LANDMARKS: u64 = 5;
    pub const PROJECTION: u64 = 6;
    pub const SPLIT: u64 = 7;
    pub const DATA: u64 = 8;
    pub const CLASSIFIER: u64 = 9;
    pub const METRICS: u64 = 10;
    /// Per-trial streams start here.
    pub const TRIALS: u64 = 1 << 32;
}
