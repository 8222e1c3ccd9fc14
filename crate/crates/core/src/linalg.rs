//! Small numeric helpers shared across modules.

use std::f64::consts::PI;

use crate::{CMatrix, CVector};

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// `u^H v`
pub fn inner(u: &CVector, v: &CVector) -> num_complex::Complex64 {
    u.dotc(v)
}

/// Hermitian part `(H + H^H) / 2`.
pub fn hermitian_part(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

/// Real trace inner product `Re tr(A^H B)`.
pub fn frob_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(2.0 * PI)).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        for k in -20..20 {
            let x = 0.123 + k as f64;
            let w = wrap_phase(x);
            assert!(w > -PI && w <= PI);
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9 || ((x - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn db_round_trip() {
        assert!((to_db(1000.0) - 30.0).abs() < 1e-12);
        assert!((from_db(-80.0) - 1e-8).abs() < 1e-20);
    }
}
