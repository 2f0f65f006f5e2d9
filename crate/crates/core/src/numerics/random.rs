//! Seeded Gaussian source on top of a counter-based ChaCha stream.
//!
//! A `(seed, stream)` pair selects one keystream; `block` offsets select
//! disjoint windows of 2^40 words inside it, which is how parallel sampling
//! stays reproducible regardless of worker count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

/// Words reserved per block window.
const BLOCK_WORD_SHIFT: u32 = 40;

/// Draws per block in [`par_fill_normals_blocks`]-style partitioning.
pub const DEFAULT_BLOCK_LEN: usize = 8192;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at_block(seed, stream, 0)
    }

    /// Source positioned at window `block` of `(seed, stream)`.
    pub fn at_block(seed: u64, stream: u64, block: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos((block as u128) << BLOCK_WORD_SHIFT);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Source for window `block` of this source's stream.
    pub fn block(&self, block: u64) -> Self {
        Self::at_block(self.seed, self.stream, block)
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        crate::stein_hermite::normal_quantile(self.uniform_open())
    }

    pub fn fill_standard_normals(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }

    pub fn standard_normals(&mut self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill_standard_normals(&mut out);
        out
    }
}

/// Fills `out` by splitting it into fixed blocks of `block_len` draws;
/// block `b` is produced by `draw(&mut src.block(b), chunk)`. Output is
/// identical for any rayon pool size.
pub fn par_fill_blocks<F>(src: &RandomSource, out: &mut [f64], block_len: usize, draw: F)
where
    F: Fn(&mut RandomSource, &mut [f64]) + Sync,
{
    let block_len = block_len.max(1);
    out.par_chunks_mut(block_len)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut s = src.block(b as u64);
            draw(&mut s, chunk);
        });
}
