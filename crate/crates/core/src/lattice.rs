//! Truncated angular-momentum lattice and its conjugate angle grid.
//!
//! Momentum sites are `n = -n_max ..= n_max`; the vector entry `j` holds
//! `n = j - n_max`. The conjugate grid is `theta_k = 2 pi k / dim`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{QkrError, Result};

/// Edge-mass check that stands in for the infinite lattice.
///
/// A wavepacket that reaches the boundary wraps around through the periodic
/// transform, so operations that spread the state check it afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationGuard {
    pub enabled: bool,
    /// Sites counted as "edge"; `None` means `ceil(dim / 16)`.
    pub margin: Option<usize>,
    pub threshold: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        Self {
            enabled: true,
            margin: None,
            threshold: 1e-8,
        }
    }
}

impl TruncationGuard {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn margin_for(&self, dim: usize) -> usize {
        self.margin.unwrap_or_else(|| dim.div_ceil(16))
    }
}

struct Inner {
    n_max: usize,
    angles: Vec<f64>,
    // e^{-i n_max theta_k}, shifts the FFT index origin onto n = -n_max
    shift: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    guard: TruncationGuard,
}

/// Momentum basis `|n|, n <= n_max` with cached transform plans.
///
/// Cloning is cheap; states hold a clone of the lattice they live on.
#[derive(Clone)]
pub struct MomentumLattice {
    inner: Arc<Inner>,
}

impl MomentumLattice {
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_guard(n_max, TruncationGuard::default())
    }

    pub fn with_guard(n_max: usize, guard: TruncationGuard) -> Result<Self> {
        if n_max == 0 {
            return Err(QkrError::EmptyLattice);
        }
        let dim = 2 * n_max + 1;
        let angles: Vec<f64> = (0..dim).map(|k| TAU * k as f64 / dim as f64).collect();
        let shift = angles
            .iter()
            .map(|&t| Complex64::from_polar(1.0, -(n_max as f64) * t))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(dim);
        let inverse = planner.plan_fft_inverse(dim);
        Ok(Self {
            inner: Arc::new(Inner {
                n_max,
                angles,
                shift,
                forward,
                inverse,
                guard,
            }),
        })
    }

    /// Same lattice with a different truncation guard.
    pub fn guarded(&self, guard: TruncationGuard) -> Self {
        let i = &self.inner;
        Self {
            inner: Arc::new(Inner {
                n_max: i.n_max,
                angles: i.angles.clone(),
                shift: i.shift.clone(),
                forward: Arc::clone(&i.forward),
                inverse: Arc::clone(&i.inverse),
                guard,
            }),
        }
    }

    pub fn n_max(&self) -> usize {
        self.inner.n_max
    }

    pub fn dim(&self) -> usize {
        2 * self.inner.n_max + 1
    }

    pub fn guard(&self) -> TruncationGuard {
        self.inner.guard
    }

    pub fn angle_grid(&self) -> &[f64] {
        &self.inner.angles
    }

    /// Momentum value of vector entry `j`.
    pub fn momentum(&self, j: usize) -> i64 {
        j as i64 - self.inner.n_max as i64
    }

    pub fn momenta(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.dim()).map(|j| self.momentum(j))
    }

    /// Vector entry of momentum `n`.
    pub fn index_of(&self, n: i64) -> Result<usize> {
        let n_max = self.inner.n_max;
        if n.unsigned_abs() as usize > n_max {
            return Err(QkrError::IndexOutOfRange { index: n, n_max });
        }
        Ok((n + n_max as i64) as usize)
    }

    pub fn contains(&self, n: i64) -> bool {
        n.unsigned_abs() as usize <= self.inner.n_max
    }

    /// psi(theta_k) = dim^{-1/2} sum_n c_n e^{i n theta_k}, in place.
    pub(crate) fn momentum_to_angle(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.dim());
        self.inner.inverse.process(buf);
        let scale = 1.0 / (self.dim() as f64).sqrt();
        for (x, s) in buf.iter_mut().zip(&self.inner.shift) {
            *x *= s * scale;
        }
    }

    /// Inverse of [`Self::momentum_to_angle`], in place.
    pub(crate) fn angle_to_momentum(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.dim());
        let scale = 1.0 / (self.dim() as f64).sqrt();
        for (x, s) in buf.iter_mut().zip(&self.inner.shift) {
            *x *= s.conj() * scale;
        }
        self.inner.forward.process(buf);
    }

    pub fn same_as(&self, other: &MomentumLattice) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.n_max() == other.n_max()
    }
}

impl fmt::Debug for MomentumLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentumLattice")
            .field("n_max", &self.n_max())
            .field("dim", &self.dim())
            .field("guard", &self.inner.guard)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_is_odd_and_grid_uniform() {
        let lat = MomentumLattice::new(7).unwrap();
        assert_eq!(lat.dim(), 15);
        let g = lat.angle_grid();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0], 0.0);
        for w in g.windows(2) {
            assert!((w[1] - w[0] - TAU / 15.0).abs() < 1e-14);
        }
        assert!(*g.last().unwrap() < TAU);
    }

    #[test]
    fn index_mapping() {
        let lat = MomentumLattice::new(2).unwrap();
        assert_eq!(lat.index_of(-2).unwrap(), 0);
        assert_eq!(lat.index_of(0).unwrap(), 2);
        assert_eq!(lat.momentum(4), 2);
        assert!(matches!(
            lat.index_of(3),
            Err(QkrError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_width_rejected() {
        assert_eq!(MomentumLattice::new(0).unwrap_err(), QkrError::EmptyLattice);
    }

    #[test]
    fn default_guard_margin() {
        let g = TruncationGuard::default();
        assert_eq!(g.margin_for(257), 17);
        assert_eq!(g.margin_for(33), 3);
    }
}
