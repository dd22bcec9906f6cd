//! Seeded pseudo-random source shared by every stochastic step.
//!
//! The generator is ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), seeded
//! through `SeedableRng::seed_from_u64`. Both the cipher stream and the seed
//! expansion are specified by `rand_core`/`rand_chacha` as portable, so a seed
//! yields the same draw sequence on every platform.
//!
//! Each helper consumes a fixed number of 64-bit words: `next_u64`, `unit`,
//! `bernoulli` and `below` take exactly one, so draw accounting stays exact.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform index in `0..n` by 128-bit multiply-high (Lemire, without the
    /// rejection step; bias is below 2^-50 for the sizes used here).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle; consumes `len - 1` draws.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Per-sample seed derivation: `stream_seed ⊕ sample_index`.
pub fn derive_seed(stream_seed: u64, index: u64) -> u64 {
    stream_seed ^ index
}
