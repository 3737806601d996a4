//! Seeded, stream-separated random number generation.
//!
//! Every simulation draws from a ChaCha20 stream keyed by `(seed, stream_id)`,
//! so trials are reproducible and independent of the order they run in.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Gamma, InverseGaussian, Normal, Poisson};

use crate::error::{Error, Result};

pub struct RngStream {
    inner: ChaCha20Rng,
}

pub fn rng_stream(seed: u64, stream_id: u64) -> RngStream {
    let mut inner = ChaCha20Rng::seed_from_u64(seed);
    inner.set_stream(stream_id);
    RngStream { inner }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn bad(what: &str, e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("{what}: {e}"))
}

impl RngStream {
    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.inner.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(bad("gamma rate", rate));
        }
        let d = Gamma::new(shape, 1.0 / rate).map_err(|e| bad("gamma variate", e))?;
        Ok(d.sample(&mut self.inner))
    }

    pub fn poisson(&mut self, lambda: f64) -> Result<u64> {
        if lambda == 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(lambda).map_err(|e| bad("poisson variate", e))?;
        Ok(d.sample(&mut self.inner) as u64)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        let d = Normal::new(mean, sd).map_err(|e| bad("normal variate", e))?;
        Ok(d.sample(&mut self.inner))
    }

    pub fn exponential(&mut self, rate: f64) -> Result<f64> {
        let d = Exp::new(rate).map_err(|e| bad("exponential variate", e))?;
        Ok(d.sample(&mut self.inner))
    }

    /// Inverse Gaussian with mean `mean` and shape `shape`.
    pub fn inverse_gaussian(&mut self, mean: f64, shape: f64) -> Result<f64> {
        let d = InverseGaussian::new(mean, shape).map_err(|e| bad("inverse gaussian variate", e))?;
        Ok(d.sample(&mut self.inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(7, 1), |r, _| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(7, 1), |r, _| Some(r.next_u64())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(rng_stream(7, 2), |r, _| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gamma_sample_mean() {
        let mut r = rng_stream(11, 0);
        let n = 200_000;
        let s: f64 = (0..n).map(|_| r.gamma(3.0, 2.0).unwrap()).sum();
        // mean 1.5, sd of mean sqrt(0.75 / n)
        assert!((s / n as f64 - 1.5).abs() < 5.0 * (0.75 / n as f64).sqrt());
    }

    #[test]
    fn inverse_gaussian_sample_mean() {
        let mut r = rng_stream(3, 9);
        let n = 200_000;
        let s: f64 = (0..n).map(|_| r.inverse_gaussian(2.0, 4.0).unwrap()).sum();
        // variance mean^3 / shape = 2
        assert!((s / n as f64 - 2.0).abs() < 5.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut r = rng_stream(0, 0);
        assert!(r.gamma(-1.0, 1.0).is_err());
        assert!(r.gamma(1.0, 0.0).is_err());
        assert!(r.poisson(-1.0).is_err());
        assert_eq!(r.poisson(0.0).unwrap(), 0);
        assert!(r.uniform() > 0.0);
    }
}
