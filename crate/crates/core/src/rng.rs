//! Portable random streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 generator keyed by
//! a 64-bit seed. Independent sub-streams of the same seed are selected with
//! the ChaCha stream counter: stream `t` of seed `s` is
//! `ChaCha8Rng::seed_from_u64(s)` with `set_stream(t)`. Monte Carlo trial `t`
//! uses stream `t`; a single draw (sensing matrix, one support sample) uses
//! stream 0.
//!
//! Uniforms take the top 53 bits of a `u64`; Gaussians use the Box-Muller
//! transform evaluated with the pure-Rust `libm`, so the produced bits do not
//! depend on the platform math library.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random stream with platform-independent output.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `(0, 1]`, safe to take the logarithm of.
    fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, both outputs used in order).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // the bias of a 64-bit modulo is irrelevant at the sizes used here
        (self.rng.next_u64() % n as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map({
            let mut s = Stream::new(7, 0);
            move |_| s.next_u64()
        }).collect();
        let mut s = Stream::new(7, 0);
        let b: Vec<u64> = (0..4).map(|_| s.next_u64()).collect();
        assert_eq!(a, b);
        let mut t = Stream::new(7, 1);
        assert_ne!(a[0], t.next_u64());
    }

    #[test]
    fn gaussian_moments() {
        let mut s = Stream::new(11, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| s.gaussian()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn uniform_range() {
        let mut s = Stream::new(3, 2);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
