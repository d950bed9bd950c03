//! Seeded randomness with a fixed, documented algorithm.
//!
//! Everything that must reproduce across releases (record splits, CV folds,
//! bootstrap resamples, synthetic data) draws from [`ChaCha8Rng`] built by
//! [`seeded`]:
//!
//! 1. the 64-bit user seed is expanded to the 32-byte ChaCha key with four
//!    successive SplitMix64 outputs, each written little-endian;
//! 2. the ChaCha stream id selects an independent sub-sequence, so a
//!    `(seed, stream)` pair identifies a generator without any shared state.
//!
//! Index draws use the widening-multiply reduction `(x * n) >> 64` on a raw
//! 64-bit output; shuffles are Fisher-Yates from the last position down.
//! Both are implemented here rather than taken from `rand` so that a
//! dependency upgrade can never silently change an assignment.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Stream ids used across the crate. Distinct purposes never share a stream.
pub mod streams {
    pub const SPLIT_HALLUCINATED: u64 = 1;
    pub const SPLIT_CORRECT: u64 = 2;
    pub const CV_FOLDS: u64 = 3;
    pub const MLP_INIT: u64 = 4;
    pub const SYNTH: u64 = 5;
    /// Bootstrap iteration `i` uses stream `BOOTSTRAP_BASE + i`.
    pub const BOOTSTRAP_BASE: u64 = 1 << 32;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform index in `0..n`. `n` must be non-zero.
pub fn index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Uniform real in `[0, 1)` with 53 random bits.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn bernoulli(rng: &mut impl RngCore, p: f64) -> bool {
    unit(rng) < p
}

pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}
