//! Dense density operators in the angle representation.

use num_complex::Complex64;

use crate::error::{QkrError, Result};
use crate::lattice::MomentumLattice;
use crate::state::RotorState;

/// `rho[k][l] = <theta_k| rho |theta_l>`, stored row-major.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    entries: Vec<Complex64>,
    lattice: MomentumLattice,
}

impl DensityMatrix {
    /// `|psi><psi|`.
    pub fn from_pure(state: &RotorState) -> Self {
        let psi = state.angle_amplitudes();
        let dim = psi.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in &psi {
            entries.extend(psi.iter().map(|b| a * b.conj()));
        }
        Self {
            entries,
            lattice: state.lattice().clone(),
        }
    }

    pub fn from_entries(lattice: &MomentumLattice, entries: Vec<Complex64>) -> Result<Self> {
        let dim = lattice.dim();
        if entries.len() != dim * dim {
            return Err(QkrError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self {
            entries,
            lattice: lattice.clone(),
        })
    }

    pub fn lattice(&self) -> &MomentumLattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.dim() + l]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|k| self.entries[k * d + k]).sum()
    }

    /// `max |rho_kl - conj(rho_lk)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for k in 0..d {
            for l in k..d {
                worst =
                    worst.max((self.entries[k * d + l] - self.entries[l * d + k].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        // rho is Hermitian, so Tr rho^2 = sum |rho_kl|^2
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The operator in momentum representation, `W rho W^dagger`, row-major.
    pub fn momentum_matrix(&self) -> Vec<Complex64> {
        let d = self.dim();
        // columns first: A = W rho
        let mut a = vec![Complex64::new(0.0, 0.0); d * d];
        let mut col = vec![Complex64::new(0.0, 0.0); d];
        for l in 0..d {
            for k in 0..d {
                col[k] = self.entries[k * d + l];
            }
            self.lattice.angle_to_momentum(&mut col);
            for n in 0..d {
                a[n * d + l] = col[n];
            }
        }
        // rows: (A W^dagger)_{nm} = conj((W conj(A_n))_m)
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        let mut row = vec![Complex64::new(0.0, 0.0); d];
        for n in 0..d {
            for l in 0..d {
                row[l] = a[n * d + l].conj();
            }
            self.lattice.angle_to_momentum(&mut row);
            for m in 0..d {
                out[n * d + m] = row[m].conj();
            }
        }
        out
    }

    /// Diagonal of [`Self::momentum_matrix`], ordered by `n = -n_max ..= n_max`.
    pub fn momentum_probabilities(&self) -> Vec<f64> {
        let d = self.dim();
        let m = self.momentum_matrix();
        (0..d).map(|n| m[n * d + n].re).collect()
    }

    /// `Tr(rho P)` for the projector onto the listed momentum sites.
    pub fn probability_on(&self, sites: &[i64]) -> f64 {
        let p = self.momentum_probabilities();
        sites
            .iter()
            .filter_map(|&n| self.lattice.index_of(n).ok())
            .map(|j| p[j])
            .sum()
    }
}
