//! Array geometry, steering vectors, path loss and the Rician RIS-user channel.
//!
//! All angles are in radians and measured from the global +x axis. Element
//! indices run `0..N` with `n_h = n % N_H` and `n_v = n / N_H`; offsets are
//! taken from the array centre so that a single element has zero phase.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::CVector;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Rician factors above this value are clamped (LOS-only limit).
pub const KAPPA_CAP: f64 = 1e12;

pub type Position = [f64; 2];

pub fn wavenumber(carrier_hz: f64) -> f64 {
    2.0 * PI * carrier_hz / SPEED_OF_LIGHT
}

pub fn half_wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * carrier_hz)
}

/// Angle of `point` seen from `origin`, via `atan2(dy, dx)`.
pub fn angle_from_positions(origin: Position, point: Position) -> Result<f64> {
    let dx = point[0] - origin[0];
    let dy = point[1] - origin[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "points coincide at [{}, {}]",
            origin[0], origin[1]
        )));
    }
    Ok(dy.atan2(dx))
}

pub fn distance(a: Position, b: Position) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Uniform linear array at the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearArray {
    pub elements: usize,
    pub spacing: f64,
}

impl LinearArray {
    pub fn half_wavelength(elements: usize, carrier_hz: f64) -> Self {
        Self {
            elements,
            spacing: half_wavelength(carrier_hz),
        }
    }
}

/// Uniform planar RIS with `rows` (vertical, N_V) by `cols` (horizontal, N_H) elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarArray {
    pub rows: usize,
    pub cols: usize,
    pub spacing_h: f64,
    pub spacing_v: f64,
}

impl PlanarArray {
    pub fn half_wavelength(rows: usize, cols: usize, carrier_hz: f64) -> Self {
        let d = half_wavelength(carrier_hz);
        Self {
            rows,
            cols,
            spacing_h: d,
            spacing_v: d,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centred (horizontal, vertical) offsets of element `n`, in meters.
    fn offsets(&self, n: usize) -> (f64, f64) {
        let n_h = (n % self.cols) as f64;
        let n_v = (n / self.cols) as f64;
        let h = (n_h - (self.cols as f64 - 1.0) / 2.0) * self.spacing_h;
        let v = (n_v - (self.rows as f64 - 1.0) / 2.0) * self.spacing_v;
        (h, v)
    }
}

/// BS steering vector `g1`: entry m has phase `+k (m - (M+1)/2) d cos(theta)`.
pub fn bs_steering(array: &LinearArray, theta_tx: f64, carrier_hz: f64) -> CVector {
    let k = wavenumber(carrier_hz);
    let centre = (array.elements as f64 - 1.0) / 2.0;
    DVector::from_iterator(
        array.elements,
        (0..array.elements).map(|m| {
            Complex64::from_polar(1.0, k * (m as f64 - centre) * array.spacing * theta_tx.cos())
        }),
    )
}

/// RIS steering vector toward the BS, `g2`. Horizontal term enters with `+cos`.
pub fn ris_steering_tx(array: &PlanarArray, theta: f64, carrier_hz: f64) -> CVector {
    ris_steering(array, theta, carrier_hz, 1.0)
}

/// RIS steering vector for targets and the user LOS path. Horizontal term enters with `-cos`.
pub fn ris_steering_rx(array: &PlanarArray, theta: f64, carrier_hz: f64) -> CVector {
    ris_steering(array, theta, carrier_hz, -1.0)
}

fn ris_steering(array: &PlanarArray, theta: f64, carrier_hz: f64, cos_sign: f64) -> CVector {
    let k = wavenumber(carrier_hz);
    let (s, c) = theta.sin_cos();
    DVector::from_iterator(
        array.len(),
        (0..array.len()).map(|n| {
            let (h, v) = array.offsets(n);
            Complex64::from_polar(1.0, -k * (v * s + cos_sign * h * c))
        }),
    )
}

/// Converts a dB loss `L0 + coeff * log10(d)` into a linear power gain.
pub fn path_loss_linear(reference_loss_db: f64, exponent_coeff: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "path loss needs a positive distance, got {distance_m}"
        )));
    }
    let loss_db = reference_loss_db + exponent_coeff * distance_m.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Rician RIS-user channel: `sqrt(k/(1+k)) sqrt(beta) a + sqrt(1/(1+k)) CN(0, beta I)`.
pub fn rician_user_channel(a_ue: &CVector, kappa: f64, beta_ue: f64, rng: &mut SimRng) -> CVector {
    let kappa = kappa.clamp(0.0, KAPPA_CAP);
    let w_los = (kappa / (1.0 + kappa)).sqrt() * beta_ue.sqrt();
    let w_nlos = (1.0 / (1.0 + kappa)).sqrt();
    a_ue.map(|a| a * w_los + rng.complex_normal(beta_ue) * w_nlos)
}

/// Deterministic and random channel quantities for one realization.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub beta_g: f64,
    pub beta_ue: f64,
    pub g1: CVector,
    pub g2: CVector,
    pub h_ue: CVector,
    pub a_targets: Vec<CVector>,
}

impl ChannelSet {
    pub fn elements(&self) -> usize {
        self.g2.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::wrap_phase;

    const F0: f64 = 10e9;

    fn assert_phases(v: &CVector, expected: &[f64]) {
        assert_eq!(v.len(), expected.len());
        for (z, &p) in v.iter().zip(expected) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!(wrap_phase(z.arg() - p).abs() < 1e-12, "{} vs {}", z.arg(), p);
        }
    }

    #[test]
    fn angles_from_layout() {
        let a = angle_from_positions([0.0, 0.0], [30.0, 30.0]).unwrap();
        assert!((a.to_degrees() - 45.0).abs() < 1e-12);
        let b = angle_from_positions([30.0, 30.0], [30.0, 31.0]).unwrap();
        assert!((b.to_degrees() - 90.0).abs() < 1e-12);
        assert!(matches!(
            angle_from_positions([30.0, 30.0], [30.0, 30.0]),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn bs_steering_examples() {
        let one = bs_steering(&LinearArray::half_wavelength(1, F0), 1.234, F0);
        assert_phases(&one, &[0.0]);
        let two = bs_steering(&LinearArray::half_wavelength(2, F0), PI / 2.0, F0);
        assert_phases(&two, &[0.0, 0.0]);
        let three = bs_steering(&LinearArray::half_wavelength(3, F0), PI / 3.0, F0);
        assert_phases(&three, &[-PI / 2.0, 0.0, PI / 2.0]);
    }

    #[test]
    fn ris_steering_examples() {
        let single = PlanarArray::half_wavelength(1, 1, F0);
        assert_phases(&ris_steering_tx(&single, 0.3, F0), &[0.0]);
        assert_phases(&ris_steering_rx(&single, 0.3, F0), &[0.0]);

        let column = PlanarArray::half_wavelength(2, 1, F0);
        assert_phases(&ris_steering_tx(&column, PI / 2.0, F0), &[PI / 2.0, -PI / 2.0]);
    }

    #[test]
    fn tx_and_rx_differ_only_through_cos_term() {
        let ris = PlanarArray::half_wavelength(3, 4, F0);
        let tx = ris_steering_tx(&ris, PI / 2.0, F0);
        let rx = ris_steering_rx(&ris, PI / 2.0, F0);
        for (a, b) in tx.iter().zip(rx.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let tx = ris_steering_tx(&ris, 0.7, F0);
        let rx = ris_steering_rx(&ris, 0.7, F0);
        assert!(tx.iter().zip(rx.iter()).any(|(a, b)| (a - b).norm() > 1e-3));
        let ones = rx.map(|z| z.conj() * z);
        assert!(ones.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_linear(30.0, 22.0, 1.0).unwrap() - 1e-3).abs() < 1e-18);
        let d1 = distance([0.0, 0.0], [30.0, 30.0]);
        let g = path_loss_linear(30.0, 22.0, d1).unwrap();
        assert!((-10.0 * g.log10() - 65.8080).abs() < 1e-3);
        let d2 = distance([30.0, 30.0], [100.0, -20.0]);
        let g = path_loss_linear(30.0, 25.0, d2).unwrap();
        assert!((-10.0 * g.log10() - 78.3654).abs() < 1e-3);
        assert!(path_loss_linear(30.0, 22.0, 0.0).is_err());
        assert!(path_loss_linear(30.0, 22.0, 10.0).unwrap() > path_loss_linear(30.0, 22.0, 10.5).unwrap());
    }

    #[test]
    fn rician_limits() {
        let ris = PlanarArray::half_wavelength(3, 3, F0);
        let a = ris_steering_rx(&ris, -0.6, F0);
        let beta = 1e-8;
        let mut rng = SimRng::seed_from(3);
        let h = rician_user_channel(&a, f64::INFINITY, beta, &mut rng);
        for (hn, an) in h.iter().zip(a.iter()) {
            assert!((hn - an * beta.sqrt()).norm() <= 1e-5 * beta.sqrt());
        }

        let mut rng = SimRng::seed_from(4);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| rician_user_channel(&a, 1.0, beta, &mut rng).norm_squared() / (a.len() as f64 * beta))
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn rician_is_reproducible() {
        let ris = PlanarArray::half_wavelength(2, 5, F0);
        let a = ris_steering_rx(&ris, 0.1, F0);
        let h1 = rician_user_channel(&a, 1.0, 1.0, &mut SimRng::seed_from(99));
        let h2 = rician_user_channel(&a, 1.0, 1.0, &mut SimRng::seed_from(99));
        assert_eq!(h1, h2);
    }
}
