//! Seeded random streams.
//!
//! Every stochastic step in the toolkit (noise, phantom sampling, weight
//! init, shuffling) draws from an explicitly keyed ChaCha8 stream; there is
//! no global RNG state. Floating-point conversion is done here from the raw
//! 64-bit output, so the produced values depend only on the key.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic random stream keyed by four 64-bit words.
///
/// Conventional key layout across the toolkit: `[purpose, seed, index, 0]`,
/// where `purpose` separates the independent uses of one user-facing seed.
pub struct SeedStream(ChaCha8Rng);

/// Purpose tags keeping streams independent per use.
pub mod purpose {
    pub const NOISE: u64 = 1;
    pub const PHANTOM: u64 = 2;
    pub const NET_INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
}

impl SeedStream {
    pub fn new(key: [u64; 4]) -> Self {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(key) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        SeedStream(ChaCha8Rng::from_seed(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; never zero, safe under `ln`.
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(hi >= lo);
        let span = (hi - lo + 1) as u128;
        lo + ((self.next_u64() as u128 * span) >> 64) as usize
    }

    /// One standard normal sample via the Box–Muller transform.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.uniform_int(0, i);
            items.swap(i, j);
        }
    }
}
