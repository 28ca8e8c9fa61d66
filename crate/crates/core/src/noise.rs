//! Gaussian kick-strength noise with a counter-based random stream.
//!
//! Draw `k` of realization `r` is a pure function of `(master_seed, r, k)`:
//! a ChaCha8 stream keyed by the seed, stream id `r`, and two 64-bit words
//! per kick fed to Box-Muller. Results therefore do not depend on thread
//! scheduling or on how many kicks other realizations consumed.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QkrError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub phi_mean: f64,
    /// Standard deviation of each kick strength.
    pub delta: f64,
    pub master_seed: u64,
    pub realizations: usize,
}

impl NoiseModel {
    pub fn new(phi_mean: f64, delta: f64, master_seed: u64, realizations: usize) -> Result<Self> {
        let model = Self {
            phi_mean,
            delta,
            master_seed,
            realizations,
        };
        model.validate()?;
        Ok(model)
    }

    /// Model with `delta = gamma * phi_mean`.
    pub fn from_gamma(
        phi_mean: f64,
        gamma: f64,
        master_seed: u64,
        realizations: usize,
    ) -> Result<Self> {
        Self::new(phi_mean, gamma * phi_mean.abs(), master_seed, realizations)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi_mean.is_finite() || self.phi_mean == 0.0 {
            return Err(QkrError::InvalidParameter(
                "mean kick strength must be finite and nonzero".into(),
            ));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(QkrError::InvalidParameter(
                "noise width must be finite and >= 0".into(),
            ));
        }
        if self.realizations == 0 {
            return Err(QkrError::InvalidParameter(
                "need at least one realization".into(),
            ));
        }
        Ok(())
    }

    /// `delta / phi_mean`.
    pub fn gamma(&self) -> f64 {
        self.delta / self.phi_mean.abs()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    /// Standard normal draws of one realization, in kick order.
    pub fn stream(&self, realization: u64) -> NormalStream {
        NormalStream::new(self.master_seed, realization)
    }

    /// `phi_mean + delta * z_k` for kicks `0..kick_count` of a realization.
    pub fn sample_strengths(&self, kick_count: usize, realization: u64) -> Vec<f64> {
        let mut z = self.stream(realization);
        (0..kick_count)
            .map(|_| self.phi_mean + self.delta * z.next_normal())
            .collect()
    }
}

/// Sequential standard normals of one `(seed, realization)` stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(master_seed: u64, realization: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(realization);
        Self { rng }
    }

    /// Draw `kick` of this stream without consuming the earlier ones.
    pub fn at(master_seed: u64, realization: u64, kick: u64) -> f64 {
        let mut s = Self::new(master_seed, realization);
        s.rng.set_word_pos(4 * kick as u128);
        s.next_normal()
    }

    pub fn next_normal(&mut self) -> f64 {
        // (0, 1] keeps the logarithm finite
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_width_is_constant() {
        let m = NoiseModel::new(0.25, 0.0, 7, 1).unwrap();
        assert!(m.sample_strengths(50, 3).iter().all(|&s| s == 0.25));
    }

    #[test]
    fn deterministic_and_random_access() {
        let m = NoiseModel::new(1.0, 0.1, 42, 4).unwrap();
        assert_eq!(m.sample_strengths(20, 5), m.sample_strengths(20, 5));
        assert_ne!(m.sample_strengths(20, 5), m.sample_strengths(20, 6));
        let mut s = m.stream(9);
        let seq: Vec<f64> = (0..10).map(|_| s.next_normal()).collect();
        for (k, z) in seq.iter().enumerate() {
            assert_eq!(NormalStream::at(42, 9, k as u64), *z);
        }
    }

    #[test]
    fn moments() {
        let m = NoiseModel::new(2.0, 0.3, 1, 1).unwrap();
        let xs = m.sample_strengths(100_000, 0);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 2.0).abs() < 5.0 * 0.3 / n.sqrt());
        assert!((sd / 0.3 - 1.0).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(NoiseModel::new(0.0, 0.1, 0, 1).is_err());
        assert!(NoiseModel::new(1.0, -0.1, 0, 1).is_err());
        assert!(NoiseModel::new(1.0, 0.1, 0, 0).is_err());
        assert!((NoiseModel::from_gamma(0.25, 0.2, 0, 1).unwrap().gamma() - 0.2).abs() < 1e-15);
    }
}
