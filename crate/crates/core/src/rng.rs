//! Seeded random stream.
//!
//! Every sample in the crate flows through [`RngStream`], which wraps a
//! ChaCha8 generator seeded from a `u64`. ChaCha8 has a fixed, documented
//! output sequence on every platform, so episode streams are reproducible
//! bit-for-bit given the seed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// 2^-53, the spacing of doubles in [0.5, 1).
const F64_UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Creates a deterministic stream from `seed`.
pub fn make_rng(seed: u64) -> RngStream {
    RngStream {
        seed,
        inner: ChaCha8Rng::seed_from_u64(seed),
    }
}

impl RngStream {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * F64_UNIT
    }

    /// Samples an index from a probability vector.
    ///
    /// `probs` is expected to sum to one; any rounding shortfall is absorbed
    /// by the last index with positive mass. Returns `None` if every entry is
    /// zero.
    pub fn categorical(&mut self, probs: &[f64]) -> Option<usize> {
        let last = probs.iter().rposition(|&p| p > 0.0)?;
        let u = self.uniform();
        let mut acc = 0.0;
        for (k, &p) in probs.iter().enumerate().take(last) {
            acc += p;
            if u < acc {
                return Some(k);
            }
        }
        Some(last)
    }
}
