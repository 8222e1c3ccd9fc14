//! Scenario description and its conversion into linear-domain model quantities.
//!
//! Scenario files are JSON objects whose keys mirror [`ScenarioConfig`].
//! Powers and losses are given in dB/dBm, angles in degrees and positions as
//! `[x, y]` pairs in meters. Everything is converted once, in
//! [`Scenario::from_config`]; the rest of the crate works in linear units
//! (powers in milliwatts) and radians.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::SystemConstants;
use crate::error::{Error, Result};
use crate::geometry::{
    angle_from_positions, bs_steering, distance, path_loss_linear, rician_user_channel, ris_steering_rx,
    ris_steering_tx, ChannelSet, LinearArray, PlanarArray, Position,
};
use crate::linalg::from_db;
use crate::perturbation::{validate_alpha, validate_weights, LambdaPolicy};
use crate::rng::SimRng;
use crate::CVector;

/// Built-in scenario: the two-target layout used by the default experiments.
pub const DEFAULT_SCENARIO_JSON: &str = include_str!("../scenarios/isac_default.json");

fn default_bs_ris_exponent() -> f64 {
    22.0
}

fn default_ris_ue_exponent() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
    pub weight: f64,
}

impl TargetSpec {
    pub fn at_angle(angle_deg: f64, weight: f64) -> Self {
        Self {
            angle_deg: Some(angle_deg),
            position: None,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub transmit_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub carrier_hz: f64,
    pub bs_antennas: usize,
    /// Vertical element count `N_V`.
    pub ris_rows: usize,
    /// Horizontal element count `N_H`.
    pub ris_cols: usize,
    pub rician_kappa: f64,
    pub reference_loss_db: f64,
    #[serde(default = "default_bs_ris_exponent")]
    pub bs_ris_loss_exponent: f64,
    #[serde(default = "default_ris_ue_exponent")]
    pub ris_ue_loss_exponent: f64,
    pub bs_pos: Position,
    pub ris_pos: Position,
    pub ue_pos: Position,
    pub targets: Vec<TargetSpec>,
    pub alpha: f64,
    #[serde(default = "default_policy")]
    pub lambda_policy: LambdaPolicy,
    #[serde(default)]
    pub seed: u64,
}

fn default_policy() -> LambdaPolicy {
    LambdaPolicy::Adaptive
}

impl ScenarioConfig {
    pub fn default_layout() -> Self {
        Self::from_json_str(DEFAULT_SCENARIO_JSON).expect("built-in scenario is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config("scenario", e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config { message, .. } => Error::config(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.weight).collect()
    }

    pub fn elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    /// Checks every invariant without building channels.
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("transmit_power_dbm", self.transmit_power_dbm),
            ("noise_power_dbm", self.noise_power_dbm),
            ("reference_loss_db", self.reference_loss_db),
            ("bs_ris_loss_exponent", self.bs_ris_loss_exponent),
            ("ris_ue_loss_exponent", self.ris_ue_loss_exponent),
        ] {
            if !value.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::config("carrier_hz", "must be positive"));
        }
        if self.bs_antennas == 0 {
            return Err(Error::config("bs_antennas", "must be at least 1"));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 {
            return Err(Error::config("ris_rows/ris_cols", "RIS needs at least one element"));
        }
        if !(self.rician_kappa >= 0.0) {
            return Err(Error::config("rician_kappa", "must be nonnegative"));
        }
        validate_alpha(self.alpha)?;
        if self.targets.is_empty() {
            return Err(Error::config("targets", "at least one target is required"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            match (t.angle_deg, t.position) {
                (Some(a), None) if a.is_finite() => {}
                (None, Some(p)) => {
                    if p == self.ris_pos {
                        return Err(Error::config(format!("targets[{i}].position"), "coincides with the RIS"));
                    }
                }
                _ => {
                    return Err(Error::config(
                        format!("targets[{i}]"),
                        "exactly one of `angle_deg` or `position` must be given",
                    ))
                }
            }
        }
        validate_weights(&self.weights()).map_err(|e| match e {
            Error::Config { message, .. } => Error::config("targets.weight", message),
            other => other,
        })?;
        for (field, a, b) in [("bs_pos/ris_pos", self.bs_pos, self.ris_pos), ("ris_pos/ue_pos", self.ris_pos, self.ue_pos)] {
            if a == b {
                return Err(Error::config(field, "positions coincide"));
            }
        }
        Ok(())
    }
}

/// A validated scenario with every deterministic model quantity precomputed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub consts: SystemConstants,
    pub bs_array: LinearArray,
    pub ris_array: PlanarArray,
    pub theta_tx: f64,
    pub theta_ue: f64,
    pub target_angles: Vec<f64>,
    pub weights: Vec<f64>,
    pub beta_ue: f64,
    pub g1: CVector,
    pub g2: CVector,
    pub a_ue: CVector,
    pub a_targets: Vec<CVector>,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let f0 = config.carrier_hz;
        let bs_array = LinearArray::half_wavelength(config.bs_antennas, f0);
        let ris_array = PlanarArray::half_wavelength(config.ris_rows, config.ris_cols, f0);

        let theta_tx = angle_from_positions(config.bs_pos, config.ris_pos)?;
        let theta_ue = angle_from_positions(config.ris_pos, config.ue_pos)?;
        let target_angles = config
            .targets
            .iter()
            .map(|t| match (t.angle_deg, t.position) {
                (Some(a), _) => Ok(a.to_radians()),
                (None, Some(p)) => angle_from_positions(config.ris_pos, p),
                (None, None) => unreachable!("validated"),
            })
            .collect::<Result<Vec<_>>>()?;

        let beta_g = path_loss_linear(
            config.reference_loss_db,
            config.bs_ris_loss_exponent,
            distance(config.bs_pos, config.ris_pos),
        )?;
        let beta_ue = path_loss_linear(
            config.reference_loss_db,
            config.ris_ue_loss_exponent,
            distance(config.ris_pos, config.ue_pos),
        )?;
        let consts = SystemConstants {
            power: from_db(config.transmit_power_dbm),
            noise_power: from_db(config.noise_power_dbm),
            beta_g,
            bs_antennas: config.bs_antennas,
        };
        consts.validate()?;

        let g1 = bs_steering(&bs_array, theta_tx, f0);
        let g2 = ris_steering_tx(&ris_array, theta_tx, f0);
        let a_ue = ris_steering_rx(&ris_array, theta_ue, f0);
        let a_targets = target_angles.iter().map(|&t| ris_steering_rx(&ris_array, t, f0)).collect();
        let weights = config.weights();
        Ok(Self {
            config,
            consts,
            bs_array,
            ris_array,
            theta_tx,
            theta_ue,
            target_angles,
            weights,
            beta_ue,
            g1,
            g2,
            a_ue,
            a_targets,
        })
    }

    pub fn default_layout() -> Self {
        Self::from_config(ScenarioConfig::default_layout()).expect("built-in scenario is valid")
    }

    pub fn elements(&self) -> usize {
        self.ris_array.len()
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn steering(&self, theta: f64) -> CVector {
        ris_steering_rx(&self.ris_array, theta, self.config.carrier_hz)
    }

    /// Draws the user channel for `seed` and bundles it with the deterministic parts.
    pub fn channels(&self, seed: u64) -> ChannelSet {
        let mut rng = SimRng::seed_from(seed);
        let h_ue = rician_user_channel(&self.a_ue, self.config.rician_kappa, self.beta_ue, &mut rng);
        ChannelSet {
            beta_g: self.consts.beta_g,
            beta_ue: self.beta_ue,
            g1: self.g1.clone(),
            g2: self.g2.clone(),
            h_ue,
            a_targets: self.a_targets.clone(),
        }
    }

    /// Same layout with a different target list.
    pub fn with_targets(&self, targets: Vec<TargetSpec>) -> Result<Self> {
        let mut config = self.config.clone();
        config.targets = targets;
        Self::from_config(config)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        let mut s = self.clone();
        s.config.alpha = alpha;
        Ok(s)
    }

    /// Same layout with an `rows x cols` RIS.
    pub fn with_ris(&self, rows: usize, cols: usize) -> Result<Self> {
        let mut config = self.config.clone();
        config.ris_rows = rows;
        config.ris_cols = cols;
        Self::from_config(config)
    }
}
