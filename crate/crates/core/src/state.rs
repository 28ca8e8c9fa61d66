//! Rotor wavefunction on the momentum lattice and its basic observables.

use num_complex::Complex64;

use crate::error::{QkrError, Result};
use crate::lattice::MomentumLattice;

/// Tolerance on `sum |c|^2 = 1` for caller-supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Momentum,
    Angle,
}

/// Normalized amplitudes over a [`MomentumLattice`], in either basis.
///
/// Entry `j` in momentum representation is the coefficient of `n = j - n_max`;
/// in angle representation it is `psi(theta_j)`.
#[derive(Debug, Clone)]
pub struct RotorState {
    amplitudes: Vec<Complex64>,
    rep: Representation,
    lattice: MomentumLattice,
}

impl RotorState {
    /// `|n>`.
    pub fn basis(lattice: &MomentumLattice, n: i64) -> Result<Self> {
        let j = lattice.index_of(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); lattice.dim()];
        amplitudes[j] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            rep: Representation::Momentum,
            lattice: lattice.clone(),
        })
    }

    pub fn from_amplitudes(
        lattice: &MomentumLattice,
        amplitudes: Vec<Complex64>,
        rep: Representation,
    ) -> Result<Self> {
        if amplitudes.len() != lattice.dim() {
            return Err(QkrError::DimensionMismatch {
                expected: lattice.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = norm_sqr(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QkrError::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes,
            rep,
            lattice: lattice.clone(),
        })
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(
        lattice: &MomentumLattice,
        mut amplitudes: Vec<Complex64>,
        rep: Representation,
    ) -> Result<Self> {
        let norm = norm_sqr(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QkrError::NotNormalized(norm));
        }
        let s = 1.0 / norm.sqrt();
        amplitudes.iter_mut().for_each(|c| *c *= s);
        Self::from_amplitudes(lattice, amplitudes, rep)
    }

    /// Wraps amplitudes without checking the norm; for partial branches.
    pub(crate) fn unchecked(
        lattice: &MomentumLattice,
        amplitudes: Vec<Complex64>,
        rep: Representation,
    ) -> Self {
        Self {
            amplitudes,
            rep,
            lattice: lattice.clone(),
        }
    }

    /// Equal-weight superposition over the momentum sites `lo..=hi`.
    pub fn uniform(lattice: &MomentumLattice, lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(QkrError::InvalidParameter(format!(
                "empty site range {lo}..={hi}"
            )));
        }
        let (a, b) = (lattice.index_of(lo)?, lattice.index_of(hi)?);
        let w = 1.0 / ((b - a + 1) as f64).sqrt();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); lattice.dim()];
        amplitudes[a..=b]
            .iter_mut()
            .for_each(|c| *c = Complex64::new(w, 0.0));
        Ok(Self {
            amplitudes,
            rep: Representation::Momentum,
            lattice: lattice.clone(),
        })
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn representation(&self) -> Representation {
        self.rep
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn to_angle(mut self) -> Self {
        self.make_angle();
        self
    }

    pub fn to_momentum(mut self) -> Self {
        self.make_momentum();
        self
    }

    pub(crate) fn make_angle(&mut self) {
        if self.rep == Representation::Momentum {
            self.lattice.momentum_to_angle(&mut self.amplitudes);
            self.rep = Representation::Angle;
        }
    }

    pub(crate) fn make_momentum(&mut self) {
        if self.rep == Representation::Angle {
            self.lattice.angle_to_momentum(&mut self.amplitudes);
            self.rep = Representation::Momentum;
        }
    }

    /// Momentum amplitudes, transforming a copy if needed.
    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        match self.rep {
            Representation::Momentum => self.amplitudes.clone(),
            Representation::Angle => {
                let mut buf = self.amplitudes.clone();
                self.lattice.angle_to_momentum(&mut buf);
                buf
            }
        }
    }

    pub fn angle_amplitudes(&self) -> Vec<Complex64> {
        match self.rep {
            Representation::Angle => self.amplitudes.clone(),
            Representation::Momentum => {
                let mut buf = self.amplitudes.clone();
                self.lattice.momentum_to_angle(&mut buf);
                buf
            }
        }
    }

    /// `|c_n|^2` ordered by `n = -n_max ..= n_max`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.with_momentum(|c| c.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Probability on momentum site `n`; zero outside the lattice.
    pub fn probability_at(&self, n: i64) -> f64 {
        match self.lattice.index_of(n) {
            Ok(j) => self.with_momentum(|c| c[j].norm_sqr()),
            Err(_) => 0.0,
        }
    }

    /// `sum |c_n|^2 n^2 / 2` (units hbar^2 / I).
    pub fn mean_energy(&self) -> f64 {
        let lat = &self.lattice;
        self.with_momentum(|c| {
            c.iter()
                .enumerate()
                .map(|(j, a)| {
                    let n = lat.momentum(j) as f64;
                    a.norm_sqr() * n * n
                })
                .sum::<f64>()
                / 2.0
        })
    }

    pub fn mean_momentum(&self) -> f64 {
        let lat = &self.lattice;
        self.with_momentum(|c| {
            c.iter()
                .enumerate()
                .map(|(j, a)| a.norm_sqr() * lat.momentum(j) as f64)
                .sum()
        })
    }

    /// Standard deviation of the momentum distribution.
    pub fn momentum_std(&self) -> f64 {
        let p = self.probabilities();
        let lat = &self.lattice;
        let mean: f64 = p
            .iter()
            .enumerate()
            .map(|(j, w)| w * lat.momentum(j) as f64)
            .sum();
        let var: f64 = p
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let d = lat.momentum(j) as f64 - mean;
                w * d * d
            })
            .sum();
        var.max(0.0).sqrt()
    }

    /// Probability on sites with `|n| > n_max - margin`.
    pub fn edge_mass(&self, margin: usize) -> f64 {
        let lat = &self.lattice;
        let inner = lat.n_max().saturating_sub(margin) as i64;
        self.with_momentum(|c| {
            c.iter()
                .enumerate()
                .filter(|(j, _)| lat.momentum(*j).abs() > inner)
                .map(|(_, a)| a.norm_sqr())
                .sum()
        })
    }

    /// Applies the lattice's truncation guard.
    pub fn check_truncation(&self) -> Result<()> {
        let guard = self.lattice.guard();
        if !guard.enabled {
            return Ok(());
        }
        let margin = guard.margin_for(self.lattice.dim());
        let mass = self.edge_mass(margin);
        if mass > guard.threshold || !mass.is_finite() {
            return Err(QkrError::TruncationGuard {
                mass,
                margin,
                threshold: guard.threshold,
            });
        }
        Ok(())
    }

    /// `<self|other>` computed in momentum representation.
    pub fn inner(&self, other: &RotorState) -> Complex64 {
        let a = self.momentum_amplitudes();
        let b = other.momentum_amplitudes();
        a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum()
    }

    /// `|<self|other>|`, i.e. equality up to a global phase when it is 1.
    pub fn fidelity(&self, other: &RotorState) -> f64 {
        self.inner(other).norm()
    }

    /// Largest componentwise deviation after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &RotorState) -> f64 {
        let ov = self.inner(other);
        let phase = if ov.norm() > 0.0 {
            ov / ov.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let a = self.momentum_amplitudes();
        let b = other.momentum_amplitudes();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x * phase - y).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(mut self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        self.amplitudes.iter_mut().for_each(|c| *c *= f);
        self
    }

    fn with_momentum<T>(&self, f: impl FnOnce(&[Complex64]) -> T) -> T {
        match self.rep {
            Representation::Momentum => f(&self.amplitudes),
            Representation::Angle => f(&self.momentum_amplitudes()),
        }
    }
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}
