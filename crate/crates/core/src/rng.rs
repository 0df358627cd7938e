//! Portable seeded random stream.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (the reference
//! seeding procedure of the xoshiro authors). All derived draws are defined
//! here in terms of the raw 64-bit outputs so that a reimplementation in
//! another language reproduces the same instances:
//!
//! - `uniform()` = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! - `below(n)` = `(next_u64() * n) >> 64` computed in 128 bits;
//! - `normal()` = Box-Muller cosine branch with `u1 = 1 - uniform()`,
//!   `u2 = uniform()` (no cached second variate).

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Clone, Debug)]
pub struct SeededRng(Xoshiro256PlusPlus);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Derives an independent stream seed from a base seed and a tag, so that
/// e.g. the k-means of an instance does not reuse the generator's stream.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    // SplitMix64 finalizer over the combined input.
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
