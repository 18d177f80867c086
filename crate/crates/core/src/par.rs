//! Deterministic case loops and seeded random streams.
//!
//! Every randomized routine draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! its stream set to a batch or case index, so each unit of work owns an
//! independent substream and results do not depend on how the units are
//! scheduled. Partial results are always combined in index order.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for a named sub-experiment.
pub fn child_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(0..n).map(f).collect()`, on rayon when the `parallel` feature is on.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Running mean and variance of weighted Monte Carlo draws.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        let var = ((self.sum_sq / n - m * m) * n / (n - 1.0)).max(0.0);
        crate::math::sqrt(var / n)
    }
}

/// Splits `n` draws into batches of at most `batch` and returns the sizes.
pub fn batches(n: u64, batch: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = n;
    while left > 0 {
        let b = left.min(batch);
        out.push(b);
        left -= b;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, 3).random();
        let b: u64 = stream_rng(7, 3).random();
        let c: u64 = stream_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn accumulator_matches_direct_formulas() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let mut acc = Accumulator::default();
        for x in xs {
            acc.push(x);
        }
        assert_eq!(acc.mean(), 3.5);
        let var = xs.iter().map(|x| (x - 3.5) * (x - 3.5)).sum::<f64>() / 3.0;
        assert!((acc.stderr() - (var / 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn batches_cover_the_total() {
        assert_eq!(batches(10, 4), alloc::vec![4, 4, 2]);
        assert!(batches(0, 4).is_empty());
    }
}
