#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ris_isac::geometry::ChannelSet;
use ris_isac::rng::SimRng;
use ris_isac::{CVector, SystemConstants};

pub fn random_unit(n: usize, rng: &mut SimRng) -> CVector {
    DVector::from_iterator(n, (0..n).map(|_| Complex64::from_polar(1.0, rng.phase())))
}

pub fn random_gaussian(n: usize, rng: &mut SimRng) -> CVector {
    DVector::from_iterator(n, (0..n).map(|_| rng.complex_normal(1.0)))
}

pub fn test_consts() -> SystemConstants {
    SystemConstants {
        power: 1.0,
        noise_power: 1e-3,
        beta_g: 1.0,
        bs_antennas: 4,
    }
}

/// Synthetic channel set with unit-modulus steering vectors and Gaussian user channel.
pub fn random_channels(n: usize, k: usize, m: usize, rng: &mut SimRng) -> ChannelSet {
    ChannelSet {
        beta_g: 1.0,
        beta_ue: 1.0,
        g1: random_unit(m, rng),
        g2: random_unit(n, rng),
        h_ue: random_gaussian(n, rng),
        a_targets: (0..k).map(|_| random_unit(n, rng)).collect(),
    }
}

pub fn random_phases(n: usize, scale: f64, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-scale, scale)).collect()
}

/// Dense Tikhonov oracle `(A^T A + lambda I)^-1 A^T b`.
pub fn normal_equation_solve(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = a.ncols();
    let lhs = a.transpose() * a + DMatrix::identity(n, n) * lambda;
    let rhs = a.transpose() * b;
    lhs.lu().solve(&rhs).expect("regularized normal equations are nonsingular")
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
