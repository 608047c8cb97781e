//! Seeded Wiener increments.
//!
//! A [`NoiseSource`] is identified by `(seed, stream)`. ChaCha8 keeps the
//! streams of one seed independent, so every trajectory of an ensemble gets
//! its own stream id and the ensemble can run in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NoiseSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh source on another stream of the same seed.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One increment ΔW ~ N(0, dt).
    pub fn increment(&mut self, dt: f64) -> f64 {
        dt.sqrt() * self.standard_normal()
    }
}

/// Builds a stream id from a small tuple of indices (e.g. fiducial, sample).
pub fn stream_id(major: u32, minor: u32) -> u64 {
    ((major as u64) << 32) | minor as u64
}

/// Draws `n` Wiener increments of variance `dt`.
pub fn gaussian_increments(src: &mut NoiseSource, dt: f64, n: usize) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    Ok((0..n).map(|_| src.increment(dt)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn identical_seed_identical_sequence() {
        let a = gaussian_increments(&mut NoiseSource::new(7, 3), 0.01, 1000).unwrap();
        let b = gaussian_increments(&mut NoiseSource::new(7, 3), 0.01, 1000).unwrap();
        assert_eq!(a, b);
        let c = gaussian_increments(&mut NoiseSource::new(7, 4), 0.01, 1000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn variance_matches_dt() {
        let dt = 1e-4;
        let v = gaussian_increments(&mut NoiseSource::new(11, 0), dt, 1_000_000).unwrap();
        let (mean, var) = mean_var(&v);
        assert!((var - dt).abs() / dt < 0.01, "var {var}");
        // mean has standard error sqrt(dt/n) = 1e-5
        assert!(mean.abs() < 5e-5, "mean {mean}");
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 1_000_000;
        let a = gaussian_increments(&mut NoiseSource::new(5, stream_id(0, 0)), 1.0, n).unwrap();
        let b = gaussian_increments(&mut NoiseSource::new(5, stream_id(0, 1)), 1.0, n).unwrap();
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&b);
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() < 0.01, "rho {rho}");
    }

    #[test]
    fn clone_continues_identically() {
        let mut a = NoiseSource::new(1, 2);
        a.increment(1.0);
        let mut b = a.clone();
        assert_eq!(a.increment(0.5), b.increment(0.5));
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(gaussian_increments(&mut NoiseSource::new(0, 0), 0.0, 3).is_err());
    }
}
