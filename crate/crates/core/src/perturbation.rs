//! Closed-form RIS design: a communication-optimal phase `v*` plus a small,
//! regularized phase perturbation that raises the beam sum toward each target.
//!
//! For target `k` the beam sum under `v = v* o exp(j dphi)` is
//!
//! ```text
//! eta_k(dphi) = sum_n exp(-j (arg a_k(n) - arg h(n))) exp(-j dphi_n)
//! ```
//!
//! and the beampattern gain is `P beta_G M |eta_k|^2`. Linearizing
//! `exp(-j x) ~ 1 - j x` turns the design into the least-squares problem
//! `min ||A dphi - b||^2 + lambda ||dphi||^2` with `A(k,n) = j exp(-j(arg a_k - arg h))`
//! and `b(k) = eta_k(0) - eta_bar_k`, which is solved through the SVD of
//! the real-stacked system.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::{Metrics, SystemConstants};
use crate::error::{Error, Result};
use crate::geometry::ChannelSet;
use crate::phase::RisPhase;
use crate::rng::SimRng;
use crate::{CMatrix, CVector};

/// Relative threshold below which singular values are dropped when `lambda == 0`.
pub const PINV_RCOND: f64 = 1e-12;

const WEIGHT_TOL: f64 = 1e-12;

fn phase_of(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// `v*(n) = exp(j arg(conj(h(n)) g2(n)))`: every SNR summand becomes real and nonnegative.
pub fn comm_optimal_phase(h_ue: &CVector, g2: &CVector) -> Result<RisPhase> {
    if h_ue.len() != g2.len() {
        return Err(Error::shape("g2", h_ue.len(), g2.len()));
    }
    Ok(RisPhase::from_phases(
        h_ue.iter().zip(g2.iter()).map(|(h, g)| phase_of(h.conj() * g)),
    ))
}

/// Per-element terms `exp(-j (arg a(n) - arg h(n)))` of the beam sum.
fn beam_terms(h_ue: &CVector, a: &CVector) -> Result<Vec<Complex64>> {
    if h_ue.len() != a.len() {
        return Err(Error::shape("target steering", h_ue.len(), a.len()));
    }
    Ok(h_ue
        .iter()
        .zip(a.iter())
        .map(|(h, a)| Complex64::from_polar(1.0, phase_of(*h) - phase_of(*a)))
        .collect())
}

/// Beam sum toward one target for a given perturbation.
pub fn eta_exact(delta_phi: &[f64], h_ue: &CVector, a: &CVector) -> Result<Complex64> {
    let terms = beam_terms(h_ue, a)?;
    if delta_phi.len() != terms.len() {
        return Err(Error::shape("perturbation", terms.len(), delta_phi.len()));
    }
    Ok(terms
        .iter()
        .zip(delta_phi)
        .map(|(t, d)| t * Complex64::from_polar(1.0, -d))
        .sum())
}

/// First-order expansion of [`eta_exact`] around `delta_phi = 0`.
pub fn eta_linearized(delta_phi: &[f64], h_ue: &CVector, a: &CVector) -> Result<Complex64> {
    let terms = beam_terms(h_ue, a)?;
    if delta_phi.len() != terms.len() {
        return Err(Error::shape("perturbation", terms.len(), delta_phi.len()));
    }
    let base: Complex64 = terms.iter().sum();
    let slope: Complex64 = terms.iter().zip(delta_phi).map(|(t, d)| t * d).sum();
    Ok(base - Complex64::i() * slope)
}

pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::config("targets", "at least one target is required"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::config("weight", format!("weights must be nonnegative, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::config("weight", format!("weights must sum to 1 (sum = {total})")));
    }
    Ok(())
}

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Designed beam-sum magnitudes `alpha * zeta_k * N`.
pub fn eta_targets(alpha: f64, weights: &[f64], elements: usize) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    validate_weights(weights)?;
    Ok(weights.iter().map(|z| alpha * z * elements as f64).collect())
}

/// `P beta_G M |alpha zeta_k N|^2`.
pub fn gain_upper_bound(alpha: f64, zeta: f64, consts: &SystemConstants, elements: usize) -> f64 {
    let eta = alpha * zeta * elements as f64;
    consts.gain_scale() * eta * eta
}

/// Regularization weight policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LambdaPolicy {
    /// `lambda = (1 - alpha^2) sigma_max`
    Adaptive,
    /// `lambda = c sigma_max`
    FixedFraction(f64),
}

impl LambdaPolicy {
    pub fn lambda(&self, alpha: f64, sigma_max: f64) -> f64 {
        match *self {
            LambdaPolicy::Adaptive => lambda_schedule(alpha, sigma_max),
            LambdaPolicy::FixedFraction(c) => c * sigma_max,
        }
    }
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Adaptive => write!(f, "adaptive"),
            LambdaPolicy::FixedFraction(c) => write!(f, "fixed:{c}"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "adaptive" {
            return Ok(LambdaPolicy::Adaptive);
        }
        let bad = || Error::config("lambda_policy", format!("expected `adaptive` or `fixed:<c>`, got `{s}`"));
        let c = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let c: f64 = c.parse().map_err(|_| bad())?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::config("lambda_policy", "fixed fraction must be nonnegative"));
        }
        Ok(LambdaPolicy::FixedFraction(c))
    }
}

impl TryFrom<String> for LambdaPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LambdaPolicy> for String {
    fn from(p: LambdaPolicy) -> String {
        p.to_string()
    }
}

pub fn lambda_schedule(alpha: f64, sigma_max: f64) -> f64 {
    (1.0 - alpha * alpha) * sigma_max
}

/// Thin SVD of the stacked matrix with a completed `N x N` right basis.
#[derive(Debug, Clone)]
pub struct SystemSvd {
    /// `2K x r` left singular vectors, `r = min(2K, N)`.
    pub u: DMatrix<f64>,
    /// Descending, length `r`.
    pub singular_values: DVector<f64>,
    /// `N x N` orthogonal; the first `r` columns pair with `singular_values`.
    pub v: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct PerturbationSystem {
    pub a: CMatrix,
    pub b: CVector,
    pub a_stacked: DMatrix<f64>,
    pub b_stacked: DVector<f64>,
    /// `sqrt(P M beta_G)`
    pub scale: f64,
    pub eta_bar: Vec<f64>,
    pub svd: SystemSvd,
    /// More targets than elements: the solve is still defined but fully determined targets are impossible.
    pub ill_posed: bool,
}

/// Builds the linearized design system for the given targets.
pub fn build_system(
    h_ue: &CVector,
    targets: &[CVector],
    eta_bar: &[f64],
    consts: &SystemConstants,
) -> Result<PerturbationSystem> {
    let k = targets.len();
    let n = h_ue.len();
    if k == 0 {
        return Err(Error::config("targets", "at least one target is required"));
    }
    if eta_bar.len() != k {
        return Err(Error::shape("eta targets", k, eta_bar.len()));
    }
    let mut terms = CMatrix::zeros(k, n);
    for (row, a) in targets.iter().enumerate() {
        for (col, t) in beam_terms(h_ue, a)?.into_iter().enumerate() {
            terms[(row, col)] = t;
        }
    }
    let a = terms.map(|t| t * Complex64::i());
    let b = DVector::from_iterator(
        k,
        (0..k).map(|row| terms.row(row).iter().sum::<Complex64>() - eta_bar[row]),
    );

    let scale = consts.gain_scale().sqrt();
    let mut a_stacked = DMatrix::zeros(2 * k, n);
    let mut b_stacked = DVector::zeros(2 * k);
    for row in 0..k {
        for col in 0..n {
            a_stacked[(row, col)] = scale * a[(row, col)].re;
            a_stacked[(k + row, col)] = scale * a[(row, col)].im;
        }
        b_stacked[row] = scale * b[row].re;
        b_stacked[k + row] = scale * b[row].im;
    }

    let svd = stacked_svd(&a_stacked)?;
    let system = PerturbationSystem {
        a,
        b,
        a_stacked,
        b_stacked,
        scale,
        eta_bar: eta_bar.to_vec(),
        svd,
        ill_posed: k > n,
    };
    system.check_stacking()?;
    Ok(system)
}

fn stacked_svd(a: &DMatrix<f64>) -> Result<SystemSvd> {
    let (rows, n) = a.shape();
    let r = rows.min(n);
    let svd = a.clone().try_svd(true, true, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numerical("SVD of the stacked system did not converge".into())
    })?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD returned no singular vectors".into())),
    };

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values = DVector::from_iterator(r, order.iter().map(|&i| svd.singular_values[i]));
    let u_sorted = DMatrix::from_fn(rows, r, |row, col| u[(row, order[col])]);
    let v_thin = DMatrix::from_fn(n, r, |row, col| v_t[(order[col], row)]);

    // Complete the right basis with the orthogonal complement of span(v_thin).
    let mut v = if r < n {
        let qr = v_thin.clone().qr();
        let mut q_t = DMatrix::identity(n, n);
        qr.q_tr_mul(&mut q_t);
        q_t.transpose()
    } else {
        DMatrix::zeros(n, n)
    };
    v.columns_mut(0, r).copy_from(&v_thin);

    Ok(SystemSvd {
        u: u_sorted,
        singular_values,
        v,
    })
}

impl PerturbationSystem {
    pub fn targets(&self) -> usize {
        self.a.nrows()
    }

    pub fn elements(&self) -> usize {
        self.a.ncols()
    }

    pub fn sigma_max(&self) -> f64 {
        self.svd.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// Beam sums at zero perturbation.
    pub fn baseline_eta(&self) -> Vec<Complex64> {
        (0..self.targets())
            .map(|k| self.b[k] + self.eta_bar[k])
            .collect()
    }

    pub fn eta_exact(&self, delta_phi: &[f64]) -> Vec<Complex64> {
        (0..self.targets())
            .map(|k| {
                self.a
                    .row(k)
                    .iter()
                    .zip(delta_phi)
                    .map(|(a, d)| -Complex64::i() * a * Complex64::from_polar(1.0, -d))
                    .sum()
            })
            .collect()
    }

    pub fn eta_linearized(&self, delta_phi: &[f64]) -> Vec<Complex64> {
        let ad = &self.a * DVector::from_iterator(delta_phi.len(), delta_phi.iter().map(|&d| Complex64::new(d, 0.0)));
        self.baseline_eta()
            .into_iter()
            .zip(ad.iter())
            .map(|(c, ad)| c - ad)
            .collect()
    }

    fn objective_from(&self, eta: &[Complex64]) -> f64 {
        self.scale.powi(2)
            * eta
                .iter()
                .zip(&self.eta_bar)
                .map(|(e, t)| (e - t).norm_sqr())
                .sum::<f64>()
    }

    /// `sum_k P M beta_G |eta_k - eta_bar_k|^2` with the exact beam sums.
    pub fn objective_exact(&self, delta_phi: &[f64]) -> f64 {
        self.objective_from(&self.eta_exact(delta_phi))
    }

    /// Same objective with linearized beam sums.
    pub fn objective_linearized(&self, delta_phi: &[f64]) -> f64 {
        self.objective_from(&self.eta_linearized(delta_phi))
    }

    /// `||A_stacked dphi - b_stacked||^2`
    pub fn objective_stacked(&self, delta_phi: &[f64]) -> f64 {
        self.residual(delta_phi).norm_squared()
    }

    fn residual(&self, delta_phi: &[f64]) -> DVector<f64> {
        &self.a_stacked * DVector::from_column_slice(delta_phi) - &self.b_stacked
    }

    /// Spot-checks the stacked/complex objective equivalence on fixed pseudo-random perturbations.
    fn check_stacking(&self) -> Result<()> {
        let mut rng = SimRng::seed_from(0x5EED_57AC);
        for _ in 0..10 {
            let d: Vec<f64> = (0..self.elements()).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            let stacked = self.objective_stacked(&d);
            let complex = self.objective_linearized(&d);
            if (stacked - complex).abs() > 1e-8 * stacked.max(complex).max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "stacked objective {stacked:e} disagrees with complex objective {complex:e}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub delta_phi: Vec<f64>,
    /// Design objective at the solution, evaluated with the exact beam sums.
    pub objective_value: f64,
    pub objective_linearized: f64,
    /// `||A_stacked dphi - b_stacked||`
    pub residual_norm: f64,
    pub lambda_used: f64,
    pub max_abs_perturbation: f64,
    /// `||dphi||^2 / 2`, in beam-sum units.
    pub linearization_error_bound: f64,
    #[serde(skip)]
    pub eta_exact: Vec<Complex64>,
    #[serde(skip)]
    pub eta_linearized: Vec<Complex64>,
}

impl SolveReport {
    /// Largest `|eta_exact - eta_linearized|` over targets.
    pub fn linearization_gap(&self) -> f64 {
        self.eta_exact
            .iter()
            .zip(&self.eta_linearized)
            .map(|(e, l)| (e - l).norm())
            .fold(0.0, f64::max)
    }

    pub fn taylor_bound_holds(&self) -> bool {
        let n = self.delta_phi.len() as f64;
        self.linearization_gap() <= self.linearization_error_bound * (1.0 + 1e-9) + 1e-12 * n
    }
}

/// Tikhonov solution `V (S^2 + lambda I)^-1 S U^T b` of the stacked system.
pub fn solve_perturbation(system: &PerturbationSystem, lambda: f64) -> Result<SolveReport> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config("lambda", format!("must be nonnegative, got {lambda}")));
    }
    let svd = &system.svd;
    let n = system.elements();
    let sigma_max = system.sigma_max();
    let projected = svd.u.transpose() * &system.b_stacked;

    let mut coeffs = DVector::zeros(n);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let filter = if lambda > 0.0 {
            s / (s * s + lambda)
        } else if s > PINV_RCOND * sigma_max {
            1.0 / s
        } else {
            0.0
        };
        coeffs[i] = filter * projected[i];
    }
    let delta = &svd.v * coeffs;
    let delta_phi: Vec<f64> = delta.iter().copied().collect();
    if delta_phi.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numerical("non-finite perturbation".into()));
    }

    let eta_exact = system.eta_exact(&delta_phi);
    let eta_linearized = system.eta_linearized(&delta_phi);
    Ok(SolveReport {
        objective_value: system.objective_from(&eta_exact),
        objective_linearized: system.objective_from(&eta_linearized),
        residual_norm: system.residual(&delta_phi).norm(),
        lambda_used: lambda,
        max_abs_perturbation: delta_phi.iter().fold(0.0, |m, d| m.max(d.abs())),
        linearization_error_bound: delta.norm_squared() / 2.0,
        delta_phi,
        eta_exact,
        eta_linearized,
    })
}

/// `v = v* o exp(j dphi)`, wrapped.
pub fn compose_phase(v_star: &RisPhase, delta_phi: &[f64]) -> Result<RisPhase> {
    v_star.compose(delta_phi)
}

/// End-to-end output of the proposed design for one channel realization.
#[derive(Debug, Clone)]
pub struct ProposedDesign {
    pub v_star: RisPhase,
    pub system: PerturbationSystem,
    pub report: SolveReport,
    pub phase: RisPhase,
    pub metrics: Metrics,
    pub upper_bounds: Vec<f64>,
}

/// Runs the full closed-form pipeline: `v*`, targets, system, lambda, solve, compose, metrics.
pub fn design(
    channels: &ChannelSet,
    consts: &SystemConstants,
    weights: &[f64],
    alpha: f64,
    policy: LambdaPolicy,
) -> Result<ProposedDesign> {
    let n = channels.elements();
    if weights.len() != channels.a_targets.len() {
        return Err(Error::shape("target weights", channels.a_targets.len(), weights.len()));
    }
    let v_star = comm_optimal_phase(&channels.h_ue, &channels.g2)?;
    let eta_bar = eta_targets(alpha, weights, n)?;
    let system = build_system(&channels.h_ue, &channels.a_targets, &eta_bar, consts)?;
    let lambda = policy.lambda(alpha, system.sigma_max());
    let report = solve_perturbation(&system, lambda)?;
    let phase = compose_phase(&v_star, &report.delta_phi)?;
    let metrics = Metrics::evaluate(&phase, channels, consts)?;
    let upper_bounds = weights
        .iter()
        .map(|&z| gain_upper_bound(alpha, z, consts, n))
        .collect();
    Ok(ProposedDesign {
        v_star,
        system,
        report,
        phase,
        metrics,
        upper_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{beampattern_gain, comm_snr_mrt};

    fn random_unit(n: usize, rng: &mut SimRng) -> CVector {
        DVector::from_iterator(n, (0..n).map(|_| Complex64::from_polar(1.0, rng.phase())))
    }

    fn random_gaussian(n: usize, rng: &mut SimRng) -> CVector {
        DVector::from_iterator(n, (0..n).map(|_| rng.complex_normal(1.0)))
    }

    fn consts() -> SystemConstants {
        SystemConstants {
            power: 1.0,
            noise_power: 1e-11,
            beta_g: 2.6e-7,
            bs_antennas: 11,
        }
    }

    #[test]
    fn comm_optimal_phase_aligns_summands() {
        let h = DVector::from_element(5, Complex64::new(0.7, 0.0));
        let g2 = DVector::from_element(5, Complex64::new(1.0, 0.0));
        let v = comm_optimal_phase(&h, &g2).unwrap();
        assert!(v.phases().iter().all(|p| p.abs() < 1e-15));

        let mut rng = SimRng::seed_from(21);
        let h = random_gaussian(30, &mut rng);
        let g2 = random_unit(30, &mut rng);
        let v = comm_optimal_phase(&h, &g2).unwrap().vector();
        for ((h, v), g) in h.iter().zip(v.iter()).zip(g2.iter()) {
            let s = h.conj() * v.conj() * g;
            assert!(s.re >= 0.0 && s.im.abs() < 1e-12);
        }
        let expected = consts().snr_scale() * h.iter().map(|z| z.norm()).sum::<f64>().powi(2);
        let got = comm_snr_mrt(&v, &h, &g2, &consts()).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn zero_channel_entry_maps_to_zero_phase() {
        let h = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)]);
        let g2 = DVector::from_element(2, Complex64::new(1.0, 0.0));
        let v = comm_optimal_phase(&h, &g2).unwrap();
        assert_eq!(v.phases()[0], 0.0);
    }

    #[test]
    fn eta_examples() {
        let mut rng = SimRng::seed_from(22);
        let n = 40;
        let h = random_gaussian(n, &mut rng);
        let a = h.map(|z| z / z.norm());
        let zero = vec![0.0; n];
        assert!((eta_exact(&zero, &h, &a).unwrap() - Complex64::new(n as f64, 0.0)).norm() < 1e-10);
        assert_eq!(eta_exact(&zero, &h, &a).unwrap(), eta_linearized(&zero, &h, &a).unwrap());

        let a = random_unit(n, &mut rng);
        let base = eta_exact(&zero, &h, &a).unwrap();
        let shifted = eta_exact(&vec![0.6; n], &h, &a).unwrap();
        assert!((shifted - base * Complex64::from_polar(1.0, -0.6)).norm() < 1e-10);
        for _ in 0..100 {
            let d: Vec<f64> = (0..n).map(|_| rng.phase()).collect();
            assert!(eta_exact(&d, &h, &random_unit(n, &mut rng)).unwrap().norm() <= n as f64 + 1e-9);
        }
        assert!(eta_exact(&zero[..3], &h, &a).is_err());
    }

    #[test]
    fn linearized_eta_is_affine() {
        let mut rng = SimRng::seed_from(23);
        let n = 25;
        let h = random_gaussian(n, &mut rng);
        let a = random_unit(n, &mut rng);
        let c = eta_linearized(&vec![0.0; n], &h, &a).unwrap();
        let d1: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let d2: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let mix: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| 0.3 * x - 2.0 * y).collect();
        let lhs = eta_linearized(&mix, &h, &a).unwrap() - c;
        let rhs = (eta_linearized(&d1, &h, &a).unwrap() - c) * 0.3 - (eta_linearized(&d2, &h, &a).unwrap() - c) * 2.0;
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn beam_sum_matches_physical_gain() {
        let mut rng = SimRng::seed_from(24);
        let n = 36;
        let c = consts();
        for _ in 0..20 {
            let h = random_gaussian(n, &mut rng);
            let g2 = random_unit(n, &mut rng);
            let a = random_unit(n, &mut rng);
            let v_star = comm_optimal_phase(&h, &g2).unwrap();
            let d: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let v = compose_phase(&v_star, &d).unwrap().vector();
            let gain = beampattern_gain(&v, &a, &g2, &c).unwrap();
            let eta = eta_exact(&d, &h, &a).unwrap();
            let predicted = c.gain_scale() * eta.norm_sqr();
            assert!((gain - predicted).abs() <= 1e-9 * gain.max(predicted), "{gain} vs {predicted}");
        }
    }

    #[test]
    fn eta_target_examples() {
        assert_eq!(eta_targets(1.0, &[0.5, 0.5], 441).unwrap(), vec![220.5, 220.5]);
        assert_eq!(eta_targets(0.0, &[0.3, 0.7], 100).unwrap(), vec![0.0, 0.0]);
        assert_eq!(eta_targets(1.0, &[1.0], 64).unwrap(), vec![64.0]);
        assert!(matches!(eta_targets(1.0, &[0.6, 0.6], 10), Err(Error::Config { .. })));
        assert!(eta_targets(1.5, &[1.0], 10).is_err());
        assert!(eta_targets(0.5, &[1.2, -0.2], 10).is_err());
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_schedule(1.0, 3.0), 0.0);
        assert_eq!(lambda_schedule(0.0, 3.0), 3.0);
        assert!((lambda_schedule(0.5, 2.0) - 1.5).abs() < 1e-15);
        assert_eq!(LambdaPolicy::FixedFraction(0.1).lambda(0.3, 5.0), 0.5);
        assert_eq!("fixed:0.5".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::FixedFraction(0.5));
        assert_eq!("adaptive".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::Adaptive);
        assert!("fixed:x".parse::<LambdaPolicy>().is_err());
        assert!("fixed:-1".parse::<LambdaPolicy>().is_err());
        let s: String = LambdaPolicy::FixedFraction(0.1).into();
        assert_eq!(s.parse::<LambdaPolicy>().unwrap(), LambdaPolicy::FixedFraction(0.1));
    }

    #[test]
    fn upper_bound_examples() {
        let c = consts();
        assert!((gain_upper_bound(1.0, 1.0, &c, 9) - c.gain_scale() * 81.0).abs() < 1e-18);
        assert_eq!(gain_upper_bound(0.0, 0.5, &c, 9), 0.0);

        // Default layout at P = 1 W: beta_G from the 65.81 dB BS-RIS loss, M = 11, N = 441.
        let beta_g = crate::geometry::path_loss_linear(30.0, 22.0, 30.0 * 2f64.sqrt()).unwrap();
        let c = SystemConstants {
            power: 1.0,
            noise_power: 1e-11,
            beta_g,
            bs_antennas: 11,
        };
        let ub = gain_upper_bound(1.0, 0.5, &c, 441);
        assert!((ub - 0.140413905).abs() < 1e-9);
    }

    fn random_system(rng: &mut SimRng, k: usize, n: usize) -> PerturbationSystem {
        let h = random_gaussian(n, rng);
        let targets: Vec<CVector> = (0..k).map(|_| random_unit(n, rng)).collect();
        let eta_bar: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.0, n as f64 / k as f64)).collect();
        build_system(&h, &targets, &eta_bar, &consts()).unwrap()
    }

    #[test]
    fn system_shapes_and_svd() {
        let mut rng = SimRng::seed_from(25);
        let sys = random_system(&mut rng, 3, 20);
        assert_eq!(sys.a.shape(), (3, 20));
        assert_eq!(sys.a_stacked.shape(), (6, 20));
        assert_eq!(sys.b_stacked.len(), 6);
        assert!(sys.a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let s = &sys.svd.singular_values;
        assert!(s.iter().zip(s.iter().skip(1)).all(|(a, b)| a >= b) && s.iter().all(|&x| x >= 0.0));
        // V is orthogonal and reproduces A_stacked.
        let v = &sys.svd.v;
        assert!((v.transpose() * v - DMatrix::<f64>::identity(20, 20)).norm() < 1e-10);
        let r = s.len();
        let recon = &sys.svd.u * DMatrix::from_diagonal(s) * v.columns(0, r).transpose();
        assert!((recon - &sys.a_stacked).norm() < 1e-10 * sys.a_stacked.norm());
        for row in 0..3 {
            for col in 0..20 {
                assert_eq!(sys.a_stacked[(row, col)], sys.scale * sys.a[(row, col)].re);
                assert_eq!(sys.a_stacked[(3 + row, col)], sys.scale * sys.a[(row, col)].im);
            }
        }
        assert!(!sys.ill_posed);
        assert!(random_system(&mut rng, 4, 3).ill_posed);
    }

    #[test]
    fn zero_rhs_gives_zero_perturbation() {
        let mut rng = SimRng::seed_from(26);
        let mut sys = random_system(&mut rng, 2, 16);
        sys.b_stacked.fill(0.0);
        for lambda in [0.0, 0.1, 10.0] {
            let rep = solve_perturbation(&sys, lambda).unwrap();
            assert!(rep.delta_phi.iter().all(|&d| d == 0.0));
        }
        assert!(solve_perturbation(&sys, -1.0).is_err());
    }

    #[test]
    fn lambda_zero_solves_exactly_when_underdetermined() {
        let mut rng = SimRng::seed_from(27);
        let sys = random_system(&mut rng, 2, 30);
        let rep = solve_perturbation(&sys, 0.0).unwrap();
        assert!(rep.residual_norm <= 1e-9 * sys.b_stacked.norm());
        assert!(rep.taylor_bound_holds());
    }

    #[test]
    fn regularization_path_is_monotone() {
        let mut rng = SimRng::seed_from(28);
        for _ in 0..10 {
            let sys = random_system(&mut rng, 3, 40);
            let smax = sys.sigma_max();
            let mut prev: Option<(f64, f64)> = None;
            for frac in [1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0] {
                let rep = solve_perturbation(&sys, frac * smax).unwrap();
                let norm = rep.delta_phi.iter().map(|d| d * d).sum::<f64>().sqrt();
                if let Some((pn, pr)) = prev {
                    assert!(norm <= pn * (1.0 + 1e-12));
                    assert!(rep.residual_norm >= pr * (1.0 - 1e-12));
                }
                prev = Some((norm, rep.residual_norm));
            }
        }
    }
}
