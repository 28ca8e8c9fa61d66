#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qkr_core::{MomentumLattice, Representation, RotorState};

/// `J_n(x)` for `n = 0..=n_hi` by Miller's backward recurrence, normalized
/// with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j(n_hi: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n_hi + 1];
        out[0] = 1.0;
        return out;
    }
    let start = 2 * ((n_hi.max(x.abs() as usize) + 40 + (x.abs().sqrt() * 10.0) as usize) / 2);
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals.truncate(n_hi + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// `J_n(x)` for any integer `n`.
pub fn bessel_signed(table: &[f64], n: i64) -> f64 {
    let v = table[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Deterministic pseudo-random normalized state from a small LCG.
pub fn random_state(lattice: &MomentumLattice, seed: u64) -> RotorState {
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut next = || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let amps = (0..lattice.dim())
        .map(|_| Complex64::new(next(), next()))
        .collect();
    RotorState::normalized(lattice, amps, Representation::Momentum).unwrap()
}

/// Dense matrix of a linear map given by its action on momentum basis
/// vectors (columns are images, in momentum representation).
pub fn dense_of(dim: usize, mut f: impl FnMut(usize) -> Vec<Complex64>) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = f(j);
        for (i, c) in col.into_iter().enumerate() {
            m[(i, j)] = c;
        }
    }
    m
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `1 - 2 sum_{j in idx} |j><j|`.
pub fn reflection(dim: usize, idx: &[usize]) -> DMatrix<Complex64> {
    let mut m = DMatrix::identity(dim, dim);
    for &j in idx {
        m[(j, j)] = Complex64::new(-1.0, 0.0);
    }
    m
}
