//! Seedable random stream shared by every sampler.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream initialised from a 64-bit seed (the grain).
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn from_seed(grain: u64) -> Self {
        RandomStream { inner: ChaCha8Rng::seed_from_u64(grain) }
    }

    /// Uniform real in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[lo, hi]`. Panics if `lo > hi`.
    pub fn next_int(&mut self, lo: i64, hi: i64) -> i64 {
        self.inner.random_range(lo..=hi)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Derives an independent stream, e.g. one per worker thread.
    pub fn fork(&mut self) -> RandomStream {
        RandomStream::from_seed(self.inner.next_u64())
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
