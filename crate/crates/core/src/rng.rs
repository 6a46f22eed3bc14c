//! Seeded random streams for instance generation.
//!
//! Every instance generator draws from ChaCha20 keyed by the user seed.
//! Independent parts of an instance (matrix entries, support positions,
//! nonzero values, image noise) use distinct ChaCha stream ids, so adding
//! draws to one part never shifts the numbers seen by another.
//!
//! Gaussians use the Box-Muller transform of two uniforms; the second
//! variate of each pair is cached and returned by the next call.

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::math;

/// Stream ids shared by the generators in [`crate::apps`].
pub mod streams {
    pub const MATRIX: u64 = 0;
    pub const SUPPORT: u64 = 1;
    pub const VALUES: u64 = 2;
    pub const COSTS: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const START: u64 = 5;
}

/// A seeded generator bound to one stream.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream { rng, spare: None }
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Standard normal variate.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], so the logarithm is finite.
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        let radius = math::sqrt(-2.0 * math::ln(u1));
        let angle = 2.0 * PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * math::cos(angle)
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_independent() {
        let mut a = Stream::new(7, streams::MATRIX);
        let mut b = Stream::new(7, streams::MATRIX);
        let mut c = Stream::new(7, streams::VALUES);
        let xa: [f64; 4] = core::array::from_fn(|_| a.unit());
        let xb: [f64; 4] = core::array::from_fn(|_| b.unit());
        let xc: [f64; 4] = core::array::from_fn(|_| c.unit());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        let mut s = Stream::new(1, streams::NOISE);
        let n = 20_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.gaussian();
            m1 += z;
            m2 += z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.03, "mean {m1}");
        assert!((m2 - 1.0).abs() < 0.05, "second moment {m2}");
    }
}
