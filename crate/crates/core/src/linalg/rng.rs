use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator; identical seeds give identical sequences.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform sample in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        self.inner.gen_range(-1.0..1.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.symmetric()).collect()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

impl Default for RngState {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SEED)
    }
}
