//! Seeded random streams.
//!
//! Every stream is ChaCha8 keyed by the master seed (expanded with
//! `SeedableRng::seed_from_u64`) with the ChaCha stream id set to the stream
//! index. Datasets use stream 0; bootstrap replicate `b` uses stream `b + 1`.
//! Uniform doubles take the top 53 bits of a `u64`; bounded integers use the
//! multiply-shift map `(u64 * n) >> 64`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Recorded in dataset provenance.
pub const GENERATOR_ID: &str = "chacha8-seed_from_u64-stream/v1";

#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Index drawn from a discrete distribution by inversion.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the running sum; take the last supported level
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}
