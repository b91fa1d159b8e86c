//! Seeded random streams.
//!
//! Every stochastic component draws from a [`SimRng`] supplied by its caller.
//! Independent consumers get independent streams of the same seed so that,
//! for example, the text layer never perturbs the PLWD trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream used for environment dynamics and action selection.
pub const STREAM_ENV: u64 = 0;
/// Stream used by text backends (phrase choice, perception noise).
pub const STREAM_TEXT: u64 = 1;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives well-spread child seeds from `(seed, salt)`.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One uniform draw in `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut SimRng) -> f64 {
    rng.gen::<f64>()
}

/// Maps a uniform draw onto `0..n`.
#[inline]
pub fn pick_index(u: f64, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u * n as f64) as usize).min(n - 1)
}
