//! MRT transmit beamforming and the communication / sensing metrics.
//!
//! The BS-RIS channel is rank one (`G = sqrt(beta_G) g1 g2^H`), so MRT along
//! `g1` maximizes the user SNR and every target's beampattern gain at once.
//! Each metric is available in a general form (explicit `G`, arbitrary `w`)
//! and in the closed form that holds after MRT; the two are used as mutual
//! cross-checks in the tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ChannelSet;
use crate::linalg::to_db;
use crate::phase::RisPhase;
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConstants {
    /// Transmit power, linear units.
    pub power: f64,
    /// Receiver noise power, same linear units as `power`.
    pub noise_power: f64,
    pub beta_g: f64,
    pub bs_antennas: usize,
}

impl SystemConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0) {
            return Err(Error::config("transmit_power", "must be positive"));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::config("noise_power", "must be positive"));
        }
        if !(self.beta_g > 0.0) {
            return Err(Error::config("beta_g", "must be positive"));
        }
        if self.bs_antennas == 0 {
            return Err(Error::config("bs_antennas", "must be at least 1"));
        }
        Ok(())
    }

    /// `P beta_G M`, the common prefactor of every post-MRT gain.
    pub fn gain_scale(&self) -> f64 {
        self.power * self.beta_g * self.bs_antennas as f64
    }

    pub fn snr_scale(&self) -> f64 {
        self.gain_scale() / self.noise_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gain {
    pub linear: f64,
    pub db: f64,
}

impl Gain {
    pub fn from_linear(linear: f64) -> Self {
        Self { linear, db: to_db(linear) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub snr: Gain,
    pub gains: Vec<Gain>,
}

impl Metrics {
    pub fn evaluate(phase: &RisPhase, channels: &ChannelSet, consts: &SystemConstants) -> Result<Self> {
        let v = phase.vector();
        let snr = comm_snr_mrt(&v, &channels.h_ue, &channels.g2, consts)?;
        let gains = channels
            .a_targets
            .iter()
            .map(|a| beampattern_gain(&v, a, &channels.g2, consts).map(Gain::from_linear))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            snr: Gain::from_linear(snr),
            gains,
        })
    }

    pub fn gains_db(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.db).collect()
    }
}

/// `w* = sqrt(P) g1 / ||g1||`.
pub fn mrt_beamformer(g1: &CVector, power: f64) -> Result<CVector> {
    let norm = g1.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateGeometry("zero BS steering vector".into()));
    }
    Ok(g1.scale(power.sqrt() / norm))
}

/// Explicit BS-RIS channel `G = sqrt(beta_G) g1 g2^H` (M x N).
pub fn bs_ris_channel(channels: &ChannelSet) -> CMatrix {
    (&channels.g1 * channels.g2.adjoint()).scale(channels.beta_g.sqrt())
}

fn check_len(what: &str, expected: usize, v: &CVector) -> Result<()> {
    if v.len() != expected {
        return Err(Error::shape(what, expected, v.len()));
    }
    Ok(())
}

/// `|(G diag(v) h)^H w|^2 / sigma^2` for an arbitrary beamformer.
pub fn comm_snr_general(w: &CVector, channels: &ChannelSet, v: &CVector, noise_power: f64) -> Result<f64> {
    let n = channels.elements();
    check_len("beamformer", channels.g1.len(), w)?;
    check_len("RIS vector", n, v)?;
    check_len("user channel", n, &channels.h_ue)?;
    let g = bs_ris_channel(channels);
    let cascaded = &g * v.component_mul(&channels.h_ue);
    Ok(cascaded.dotc(w).norm_sqr() / noise_power)
}

/// `a^H diag(v^H) G^H w w^H G diag(v) a` for an arbitrary beamformer.
pub fn beampattern_gain_general(w: &CVector, channels: &ChannelSet, v: &CVector, a: &CVector) -> Result<f64> {
    let n = channels.elements();
    check_len("beamformer", channels.g1.len(), w)?;
    check_len("RIS vector", n, v)?;
    check_len("target steering", n, a)?;
    let g: DMatrix<Complex64> = bs_ris_channel(channels);
    let y = &g * v.component_mul(a);
    Ok(w.dotc(&y).norm_sqr())
}

/// `sum_n conj(x_n) conj(v_n) g2_n`
fn reflected_sum(x: &CVector, v: &CVector, g2: &CVector) -> Complex64 {
    x.iter()
        .zip(v.iter())
        .zip(g2.iter())
        .map(|((x, v), g)| (x * v).conj() * g)
        .sum()
}

/// Post-MRT user SNR `(P/sigma^2) beta_G M |h^H diag(v^H) g2|^2`.
pub fn comm_snr_mrt(v: &CVector, h_ue: &CVector, g2: &CVector, consts: &SystemConstants) -> Result<f64> {
    check_len("user channel", v.len(), h_ue)?;
    check_len("g2", v.len(), g2)?;
    Ok(consts.snr_scale() * reflected_sum(h_ue, v, g2).norm_sqr())
}

/// Post-MRT beampattern gain `P beta_G M |a^H diag(v^H) g2|^2`.
pub fn beampattern_gain(v: &CVector, a: &CVector, g2: &CVector, consts: &SystemConstants) -> Result<f64> {
    check_len("target steering", v.len(), a)?;
    check_len("g2", v.len(), g2)?;
    Ok(consts.gain_scale() * reflected_sum(a, v, g2).norm_sqr())
}
