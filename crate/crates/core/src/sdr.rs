//! Semidefinite-relaxation benchmark.
//!
//! Lifting `V = v v^H` turns the user SNR and the beampattern gains into trace
//! forms `tr(V Psi)`. Dropping the rank-one constraint leaves the SDP
//!
//! ```text
//! max  tr(V Psi_ue)
//! s.t. tr(V Psi_k) >= d_k,  V(n,n) = 1,  V psd
//! ```
//!
//! which is solved here by an ADMM splitting between an affine copy
//! `(X, s)` and a cone copy `(Z, t)` with `Z` psd and `t >= 0`. The affine
//! step is a Euclidean projection whose Gram matrix is factored once; the
//! cone step is a Hermitian eigenvalue clamp. A feasible unit-modulus vector
//! is then drawn from the relaxed solution by Gaussian randomization.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::beamforming::{Gain, Metrics, SystemConstants};
use crate::error::{Error, Result};
use crate::geometry::ChannelSet;
use crate::linalg::{frob_inner, hermitian_part};
use crate::phase::RisPhase;
use crate::rng::SimRng;
use crate::{CMatrix, CVector};

/// Fractional shortfall tolerated when deciding whether a randomized candidate meets a gain constraint.
pub const RANDOMIZATION_SLACK: f64 = 0.05;

fn rank_one(q: &CVector, scale: f64) -> CMatrix {
    (q * q.adjoint()).scale(scale)
}

/// `conj(x) o g2`, the vector whose outer product forms a `Psi` matrix.
fn reflect_vector(x: &CVector, g2: &CVector) -> Result<CVector> {
    if x.len() != g2.len() {
        return Err(Error::shape("g2", x.len(), g2.len()));
    }
    Ok(x.zip_map(g2, |x, g| x.conj() * g))
}

/// `Psi_ue = (P/sigma^2) beta_G M (diag(h^H) g2)(diag(h^H) g2)^H`
pub fn build_psi_ue(h_ue: &CVector, g2: &CVector, consts: &SystemConstants) -> Result<CMatrix> {
    Ok(rank_one(&reflect_vector(h_ue, g2)?, consts.snr_scale()))
}

/// `Psi_k = P beta_G M (diag(a_k^H) g2)(diag(a_k^H) g2)^H`
pub fn build_psi_target(a: &CVector, g2: &CVector, consts: &SystemConstants) -> Result<CMatrix> {
    Ok(rank_one(&reflect_vector(a, g2)?, consts.gain_scale()))
}

/// `v^H Psi v`, real for Hermitian `Psi`.
pub fn quadratic_form(psi: &CMatrix, v: &CVector) -> f64 {
    v.dotc(&(psi * v)).re
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub psi_ue: CMatrix,
    pub psi_targets: Vec<CMatrix>,
    /// Required beampattern gains, linear units.
    pub desired_gains: Vec<f64>,
}

impl SdpProblem {
    pub fn new(psi_ue: CMatrix, psi_targets: Vec<CMatrix>, desired_gains: Vec<f64>) -> Result<Self> {
        let n = psi_ue.nrows();
        if psi_ue.ncols() != n {
            return Err(Error::Shape("Psi_ue must be square".into()));
        }
        if psi_targets.len() != desired_gains.len() {
            return Err(Error::shape("desired gains", psi_targets.len(), desired_gains.len()));
        }
        for psi in &psi_targets {
            if psi.shape() != (n, n) {
                return Err(Error::Shape(format!("Psi_k is {:?}, expected ({n}, {n})", psi.shape())));
            }
        }
        if desired_gains.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::config("desired_gains", "must be nonnegative"));
        }
        Ok(Self {
            psi_ue,
            psi_targets,
            desired_gains,
        })
    }

    pub fn from_channels(channels: &ChannelSet, consts: &SystemConstants, desired_gains: Vec<f64>) -> Result<Self> {
        let psi_ue = build_psi_ue(&channels.h_ue, &channels.g2, consts)?;
        let psi_targets = channels
            .a_targets
            .iter()
            .map(|a| build_psi_target(a, &channels.g2, consts))
            .collect::<Result<Vec<_>>>()?;
        Self::new(psi_ue, psi_targets, desired_gains)
    }

    pub fn elements(&self) -> usize {
        self.psi_ue.nrows()
    }

    pub fn metrics_for(&self, v: &CVector) -> Metrics {
        Metrics {
            snr: Gain::from_linear(quadratic_form(&self.psi_ue, v)),
            gains: self
                .psi_targets
                .iter()
                .map(|p| Gain::from_linear(quadratic_form(p, v)))
                .collect(),
        }
    }
}

/// Euclidean projection of a Hermitian matrix onto the psd cone.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Shape("psd projection needs a square matrix".into()));
    }
    let sym = hermitian_part(h);
    if sym.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in psd projection".into()));
    }
    let eig = sym.symmetric_eigen();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let q = eig.eigenvectors.column(i);
            out += (q * q.adjoint()).scale(lambda);
        }
    }
    Ok(hermitian_part(&out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmmSettings {
    /// Initial penalty.
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Residual-balancing ratio.
    pub balance_ratio: f64,
    /// Penalty multiplier applied when rebalancing.
    pub rho_step: f64,
    /// Iterations between rebalancing checks.
    pub balance_every: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol: 1e-5,
            max_iter: 5000,
            balance_ratio: 10.0,
            rho_step: 2.0,
            balance_every: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdrSolution {
    /// Relaxed solution (psd).
    pub v: CMatrix,
    /// `tr(V Psi_ue)`; an upper bound on the SNR of any feasible unit-modulus design.
    pub relaxed_objective: f64,
    /// Relative shortfall `max(0, d_k - tr(V Psi_k)) / d_k` per constraint.
    pub constraint_residuals: Vec<f64>,
    /// `max_n |V(n,n) - 1|`
    pub diag_residual: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub extracted: Option<Randomization>,
}

impl SdrSolution {
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_part(&self.v)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Affine constraint operator `(X, s) -> [Re X(n,n); <Q_k, X> - s_k]` and its projector.
struct AffineProjector {
    n: usize,
    q: Vec<CMatrix>,
    rhs: DVector<f64>,
    gram: Cholesky<f64, nalgebra::Dyn>,
}

impl AffineProjector {
    fn new(n: usize, q: Vec<CMatrix>, targets: &[f64]) -> Result<Self> {
        let k = q.len();
        let m = n + k;
        let mut g = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            g[(i, i)] = 1.0;
        }
        for (a, qa) in q.iter().enumerate() {
            for i in 0..n {
                g[(i, n + a)] = qa[(i, i)].re;
                g[(n + a, i)] = qa[(i, i)].re;
            }
            for (b, qb) in q.iter().enumerate() {
                g[(n + a, n + b)] = frob_inner(qa, qb) + if a == b { 1.0 } else { 0.0 };
            }
        }
        let gram = Cholesky::new(g).ok_or_else(|| Error::Numerical("constraint Gram matrix is singular".into()))?;
        let mut rhs = DVector::from_element(m, 1.0);
        for (a, d) in targets.iter().enumerate() {
            rhs[n + a] = *d;
        }
        Ok(Self { n, q, rhs, gram })
    }

    fn apply(&self, x: &CMatrix, s: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n + self.q.len());
        for i in 0..self.n {
            out[i] = x[(i, i)].re;
        }
        for (a, q) in self.q.iter().enumerate() {
            out[self.n + a] = frob_inner(q, x) - s[a];
        }
        out
    }

    /// Projects `(x, s)` in place onto the affine set.
    fn project(&self, x: &mut CMatrix, s: &mut DVector<f64>) {
        let y = self.gram.solve(&(self.apply(x, s) - &self.rhs));
        for i in 0..self.n {
            x[(i, i)] -= Complex64::new(y[i], 0.0);
        }
        for (a, q) in self.q.iter().enumerate() {
            let ya = y[self.n + a];
            *x -= q.scale(ya);
            s[a] += ya;
        }
    }
}

/// Solves the relaxed problem with ADMM.
pub fn solve_sdp(problem: &SdpProblem, settings: &AdmmSettings) -> Result<SdrSolution> {
    let n = problem.elements();
    let k = problem.psi_targets.len();
    if n == 0 {
        return Err(Error::Shape("empty SDP".into()));
    }

    // Normalize objective and constraint rows to unit Frobenius norm.
    let obj_scale = problem.psi_ue.norm();
    let c = if obj_scale > 0.0 {
        hermitian_part(&problem.psi_ue).unscale(obj_scale)
    } else {
        CMatrix::zeros(n, n)
    };
    let mut q = Vec::with_capacity(k);
    let mut d = Vec::with_capacity(k);
    for (psi, &desired) in problem.psi_targets.iter().zip(&problem.desired_gains) {
        let s = psi.norm();
        if s > 0.0 {
            q.push(hermitian_part(psi).unscale(s));
            d.push(desired / s);
        } else {
            q.push(CMatrix::zeros(n, n));
            d.push(desired);
        }
    }
    let projector = AffineProjector::new(n, q, &d)?;

    let mut rho = settings.rho;
    let mut z = CMatrix::identity(n, n);
    let mut t = DVector::<f64>::zeros(k);
    let mut u = CMatrix::zeros(n, n);
    let mut w = DVector::<f64>::zeros(k);
    let mut x;
    let mut s;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut history: Vec<f64> = Vec::new();

    for iter in 1..=settings.max_iter {
        x = &z - &u + c.unscale(rho);
        s = &t - &w;
        projector.project(&mut x, &mut s);

        let z_old = std::mem::replace(&mut z, psd_project(&(&x + &u))?);
        let t_old = std::mem::replace(&mut t, (&s + &w).map(|v| v.max(0.0)));

        u += &x - &z;
        w += &s - &t;

        primal = ((&x - &z).norm_squared() + (&s - &t).norm_squared()).sqrt();
        dual = rho * ((&z - &z_old).norm_squared() + (&t - &t_old).norm_squared()).sqrt();
        history.push(primal);

        if primal <= settings.tol && dual <= settings.tol {
            return Ok(finish(problem, z, iter, primal, dual));
        }

        if iter % settings.balance_every.max(1) != 0 {
            continue;
        }
        if primal > settings.balance_ratio * dual {
            rho *= settings.rho_step;
            u = u.unscale(settings.rho_step);
            w = w.unscale(settings.rho_step);
        } else if dual > settings.balance_ratio * primal {
            rho /= settings.rho_step;
            u = u.scale(settings.rho_step);
            w = w.scale(settings.rho_step);
        }
    }

    // Distinguish a stalled, slack-pinned run from slow convergence.
    let window = (settings.max_iter / 10).max(1);
    let stalled = history.len() > window && {
        let recent = history[history.len() - 1];
        let earlier = history[history.len() - 1 - window];
        recent > 0.99 * earlier
    };
    if stalled && primal > 10.0 * settings.tol && t.iter().any(|&v| v == 0.0) {
        return Err(Error::Infeasible {
            iterations: settings.max_iter,
            primal,
        });
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iter,
        primal,
        dual,
    })
}

fn finish(problem: &SdpProblem, z: CMatrix, iterations: usize, primal: f64, dual: f64) -> SdrSolution {
    let relaxed_objective = frob_inner(&problem.psi_ue, &z);
    let constraint_residuals = problem
        .psi_targets
        .iter()
        .zip(&problem.desired_gains)
        .map(|(psi, &d)| {
            if d > 0.0 {
                ((d - frob_inner(psi, &z)) / d).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let diag_residual = (0..z.nrows()).map(|i| (z[(i, i)].re - 1.0).abs()).fold(0.0, f64::max);
    SdrSolution {
        v: z,
        relaxed_objective,
        constraint_residuals,
        diag_residual,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        extracted: None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Randomization {
    pub phase: RisPhase,
    pub metrics: Metrics,
    /// Whether the selected candidate meets every constraint within the slack.
    pub feasible: bool,
    /// SNR of every candidate, in draw order.
    pub candidate_snr: Vec<f64>,
    /// `min_k P_k / d_k` of every candidate, in draw order.
    pub candidate_worst_ratio: Vec<f64>,
}

/// Draws `trials` candidates `xi ~ CN(0, V)`, projects them to unit modulus and
/// keeps the best one: the highest-SNR candidate meeting every gain constraint
/// (within [`RANDOMIZATION_SLACK`]), or failing that the one with the largest
/// worst-case gain ratio.
pub fn gaussian_randomization(v: &CMatrix, problem: &SdpProblem, trials: usize, seed: u64) -> Result<Randomization> {
    if trials == 0 {
        return Err(Error::config("trials", "at least one randomization trial is required"));
    }
    let n = problem.elements();
    if v.shape() != (n, n) {
        return Err(Error::Shape(format!("relaxed solution is {:?}, expected ({n}, {n})", v.shape())));
    }
    let eig = hermitian_part(v).symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut factor = eig.eigenvectors.clone();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        // Round-off eigenvalues would otherwise add noise to an exactly rank-deficient covariance.
        let s = if lambda > 1e-12 * lambda_max { lambda.sqrt() } else { 0.0 };
        factor.column_mut(i).scale_mut(s);
    }

    let mut best_feasible: Option<(f64, CVector, Metrics)> = None;
    let mut best_ratio: Option<(f64, CVector, Metrics)> = None;
    let mut candidate_snr = Vec::with_capacity(trials);
    let mut candidate_worst_ratio = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = SimRng::child(seed, trial as u64);
        let r = CVector::from_iterator(n, (0..n).map(|_| rng.complex_normal(1.0)));
        let xi = &factor * r;
        let cand = RisPhase::from_vector(&xi).vector();
        let metrics = problem.metrics_for(&cand);
        candidate_snr.push(metrics.snr.linear);

        let worst_ratio = metrics
            .gains
            .iter()
            .zip(&problem.desired_gains)
            .map(|(g, &d)| if d > 0.0 { g.linear / d } else { f64::INFINITY })
            .fold(f64::INFINITY, f64::min);
        candidate_worst_ratio.push(worst_ratio);
        if worst_ratio >= 1.0 - RANDOMIZATION_SLACK {
            if best_feasible.as_ref().is_none_or(|(snr, _, _)| metrics.snr.linear > *snr) {
                best_feasible = Some((metrics.snr.linear, cand.clone(), metrics.clone()));
            }
        }
        if best_ratio.as_ref().is_none_or(|(ratio, _, _)| worst_ratio > *ratio) {
            best_ratio = Some((worst_ratio, cand, metrics));
        }
    }
    let feasible = best_feasible.is_some();
    let (_, v, metrics) = best_feasible.or(best_ratio).expect("at least one trial");
    Ok(Randomization {
        phase: RisPhase::from_vector(&v),
        metrics,
        feasible,
        candidate_snr,
        candidate_worst_ratio,
    })
}

/// Solves the relaxation and attaches a randomized unit-modulus design.
pub fn solve_and_extract(problem: &SdpProblem, settings: &AdmmSettings, trials: usize, seed: u64) -> Result<SdrSolution> {
    let mut sol = solve_sdp(problem, settings)?;
    sol.extracted = Some(gaussian_randomization(&sol.v, problem, trials, seed)?);
    Ok(sol)
}
