use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::wrap_phase;
use crate::CVector;

/// RIS phase-shift configuration. Phases are stored wrapped to `(-pi, pi]`;
/// the unit-modulus reflection vector is `v = exp(j phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhase {
    phi: Vec<f64>,
}

impl RisPhase {
    pub fn from_phases(phi: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phi: phi.into_iter().map(wrap_phase).collect(),
        }
    }

    /// Projects an arbitrary complex vector onto unit modulus (zero entries map to phase 0).
    pub fn from_vector(v: &CVector) -> Self {
        Self::from_phases(v.iter().map(|z| if *z == Complex64::new(0.0, 0.0) { 0.0 } else { z.arg() }))
    }

    pub fn zeros(n: usize) -> Self {
        Self { phi: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phi
    }

    pub fn vector(&self) -> CVector {
        DVector::from_iterator(self.phi.len(), self.phi.iter().map(|&p| Complex64::from_polar(1.0, p)))
    }

    /// Applies the perturbation `v = v* o exp(j delta)`.
    pub fn compose(&self, delta_phi: &[f64]) -> Result<RisPhase> {
        if delta_phi.len() != self.phi.len() {
            return Err(Error::shape("perturbation", self.phi.len(), delta_phi.len()));
        }
        Ok(Self::from_phases(self.phi.iter().zip(delta_phi).map(|(p, d)| p + d)))
    }

    /// Recovers `delta` (mod 2 pi) such that `base.compose(delta) == self`.
    pub fn relative_to(&self, base: &RisPhase) -> Result<Vec<f64>> {
        if base.len() != self.len() {
            return Err(Error::shape("base phase", self.len(), base.len()));
        }
        Ok(self.phi.iter().zip(&base.phi).map(|(p, b)| wrap_phase(p - b)).collect())
    }
}

impl serde::Serialize for RisPhase {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.phases().serialize(serializer)
    }
}
