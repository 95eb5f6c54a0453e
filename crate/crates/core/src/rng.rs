//! Seeded, counter-based random number generation.
//!
//! Every consumer derives its own substream from the run seed and a
//! `(purpose, epoch, unit)` triple. Substreams map to distinct ChaCha12
//! streams (distinct nonces on one key), so they never overlap and the
//! draws do not depend on evaluation or thread order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Namespaces for substreams. The discriminant is part of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Init = 1,
    Reparam = 2,
    Shuffle = 3,
    Labels = 4,
    Eval = 5,
    Mc = 6,
    Mine = 7,
    Data = 8,
    Test = 9,
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl SeededRng {
    /// Root stream for a run. Substreams should be derived from this.
    pub fn new(seed: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(0);
        SeededRng { seed, inner }
    }

    /// Derive the substream for `(purpose, epoch, unit)`. Derivation always
    /// starts from the root seed, so the result is independent of how much
    /// of `self` has been consumed.
    pub fn substream(&self, purpose: Purpose, epoch: u64, unit: u64) -> Self {
        let stream = ((purpose as u64) << 56) | ((epoch & 0x00FF_FFFF) << 32) | (unit & 0xFFFF_FFFF);
        let mut inner = ChaCha12Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        SeededRng { seed: self.seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// One draw from N(0, 1).
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// i.i.d. N(0,1) draws.
    pub fn standard_normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform index in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        (self.inner.random_range(0..n as u64)) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.inner.random_range(0..=i as u64)) as usize;
            xs.swap(i, j);
        }
    }

    /// Seeded permutation of [0, n).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

/// `sample_standard_normal` from the spec: n i.i.d. N(0,1) draws.
pub fn sample_standard_normal(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    rng.standard_normal_vec(n)
}
