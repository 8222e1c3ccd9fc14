//! Closed-form RIS phase design for integrated sensing and communication.
//!
//! The crate builds the channel model for a BS / RIS / user / targets layout,
//! designs the RIS configuration with the closed-form perturbation method
//! ([`perturbation`]), benchmarks it against a semidefinite relaxation solved
//! by a splitting method ([`sdr`]), and reproduces the trade-off studies as
//! CSV-producing experiments ([`experiments`]).

pub mod beamforming;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod perturbation;
pub mod phase;
pub mod rng;
pub mod sdr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub use beamforming::{Metrics, SystemConstants};
pub use config::{Scenario, ScenarioConfig};
pub use error::{Error, Result};
pub use perturbation::{LambdaPolicy, PerturbationSystem, SolveReport};
pub use phase::RisPhase;
pub use rng::SimRng;
pub use sdr::{SdpProblem, SdrSolution};
