//! Reproducible experiment drivers and their CSV outputs.
//!
//! Every experiment is a grid of independent cells (axis value x seed, or
//! grid point). Cells are evaluated in parallel and merged by index, so the
//! output does not depend on the thread count. Seed-level results are kept;
//! series means are taken over seeds in the dB domain.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::{beampattern_gain, Metrics};
use crate::config::{Scenario, TargetSpec};
use crate::error::{Error, Result};
use crate::geometry::{angle_from_positions, ChannelSet, Position};
use crate::linalg::to_db;
use crate::perturbation::{comm_optimal_phase, design, gain_upper_bound, LambdaPolicy};
use crate::phase::RisPhase;
use crate::rng::child_seed;
use crate::sdr::{solve_and_extract, AdmmSettings, SdpProblem, SdrSolution};

pub const DEFAULT_SDR_CAP: usize = 64;
pub const DEFAULT_RANDOMIZATION_TRIALS: usize = 100;

/// Stream index used to derive the randomization seed from a channel seed.
const RANDOMIZATION_STREAM: u64 = 0x5D12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// `v*` only, no perturbation.
    CommOnly,
    Proposed,
    /// Gaussian-randomized SDR design.
    Sdr,
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::CommOnly => "comm_only",
            Method::Proposed => "proposed",
            Method::Sdr => "sdr",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comm-only" | "comm_only" => Ok(Method::CommOnly),
            "proposed" => Ok(Method::Proposed),
            "sdr" => Ok(Method::Sdr),
            other => Err(Error::config(
                "method",
                format!("expected proposed, sdr or comm-only, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOptions {
    pub seeds: Vec<u64>,
    pub sdr_cap: usize,
    /// Run the SDR benchmark in sweeps when the RIS is small enough.
    pub include_sdr: bool,
    pub admm: AdmmSettings,
    pub randomization_trials: usize,
}

impl ExperimentOptions {
    pub fn with_seeds(seeds: Vec<u64>) -> Self {
        Self {
            seeds,
            sdr_cap: DEFAULT_SDR_CAP,
            include_sdr: true,
            admm: AdmmSettings::default(),
            randomization_trials: DEFAULT_RANDOMIZATION_TRIALS,
        }
    }

    fn sdr_enabled(&self, n: usize) -> bool {
        self.include_sdr && n <= self.sdr_cap
    }

    fn check_seeds(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        Ok(())
    }
}

/// Solves the SDR benchmark with desired gains equal to the proposed method's upper bounds.
pub fn sdr_design(
    scenario: &Scenario,
    channels: &ChannelSet,
    weights: &[f64],
    alpha: f64,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<SdrSolution> {
    let n = channels.elements();
    if n > opts.sdr_cap {
        return Err(Error::CapExceeded { n, cap: opts.sdr_cap });
    }
    let desired = weights
        .iter()
        .map(|&z| gain_upper_bound(alpha, z, &scenario.consts, n))
        .collect();
    let problem = SdpProblem::from_channels(channels, &scenario.consts, desired)?;
    solve_and_extract(
        &problem,
        &opts.admm,
        opts.randomization_trials,
        child_seed(seed, RANDOMIZATION_STREAM),
    )
}

/// RIS configuration produced by `method` for one channel realization.
pub fn design_phase(
    scenario: &Scenario,
    channels: &ChannelSet,
    method: Method,
    alpha: f64,
    policy: LambdaPolicy,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<RisPhase> {
    match method {
        Method::CommOnly => comm_optimal_phase(&channels.h_ue, &channels.g2),
        Method::Proposed => Ok(design(channels, &scenario.consts, &scenario.weights, alpha, policy)?.phase),
        Method::Sdr => {
            let sol = sdr_design(scenario, channels, &scenario.weights, alpha, seed, opts)?;
            Ok(sol.extracted.expect("extraction attached").phase)
        }
    }
}

/// Angle-only far-field beampattern gain of `phase` toward `theta`, in dB.
pub fn gain_toward(scenario: &Scenario, channels: &ChannelSet, phase: &RisPhase, theta: f64) -> Result<f64> {
    let a = scenario.steering(theta);
    Ok(to_db(beampattern_gain(&phase.vector(), &a, &channels.g2, &scenario.consts)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid with square cells of `resolution` meters (last cell may be clipped).
    pub fn with_resolution(x: (f64, f64), y: (f64, f64), resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::config("resolution", "must be positive"));
        }
        let nx = ((x.1 - x.0) / resolution).ceil().max(1.0) as usize;
        let ny = ((y.1 - y.0) / resolution).ceil().max(1.0) as usize;
        Self::new(x, y, nx, ny)
    }

    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if !(x.1 > x.0) || !(y.1 > y.0) || nx == 0 || ny == 0 {
            return Err(Error::config("grid", "ranges must be increasing and cell counts positive"));
        }
        Ok(Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
        })
    }

    /// Cell size `(dx, dy)` in meters.
    pub fn resolution(&self) -> (f64, f64) {
        (
            (self.x_max - self.x_min) / self.nx as f64,
            (self.y_max - self.y_min) / self.ny as f64,
        )
    }

    /// Cell centres, row-major in y then x.
    pub fn centres(&self) -> Vec<Position> {
        let (dx, dy) = self.resolution();
        (0..self.ny)
            .flat_map(|j| {
                (0..self.nx).map(move |i| [self.x_min + (i as f64 + 0.5) * dx, self.y_min + (j as f64 + 0.5) * dy])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapCell {
    pub x_m: f64,
    pub y_m: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapGrid {
    pub grid: GridSpec,
    pub method: Method,
    pub cells: Vec<HeatmapCell>,
    pub ris_position: Position,
    pub ue_position: Position,
    pub ue_angle_deg: f64,
    pub target_angles_deg: Vec<f64>,
}

/// Beampattern gain over a spatial grid for a single channel realization.
pub fn run_heatmap(
    scenario: &Scenario,
    grid: &GridSpec,
    method: Method,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<HeatmapGrid> {
    let n = scenario.elements();
    if method == Method::Sdr && n > opts.sdr_cap {
        return Err(Error::CapExceeded { n, cap: opts.sdr_cap });
    }
    let channels = scenario.channels(seed);
    let phase = design_phase(
        scenario,
        &channels,
        method,
        scenario.alpha(),
        scenario.config.lambda_policy,
        seed,
        opts,
    )?;
    let ris = scenario.config.ris_pos;
    let cells = grid
        .centres()
        .par_iter()
        .map(|&p| {
            let theta = angle_from_positions(ris, p)?;
            Ok(HeatmapCell {
                x_m: p[0],
                y_m: p[1],
                gain_db: gain_toward(scenario, &channels, &phase, theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatmapGrid {
        grid: *grid,
        method,
        cells,
        ris_position: ris,
        ue_position: scenario.config.ue_pos,
        ue_angle_deg: scenario.theta_ue.to_degrees(),
        target_angles_deg: scenario.target_angles.iter().map(|t| t.to_degrees()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub axis: f64,
    /// `proposed:<policy>`, `sdr_ub`, `sdr_rand`, `comm_only`, ...
    pub method: String,
    pub seed: u64,
    pub gamma_db: f64,
    pub gains_db: Vec<f64>,
    /// Whether the linearization error stayed within `||dphi||^2 / 2` (proposed rows only).
    pub taylor_bound_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub axis: f64,
    pub gamma_db: f64,
    pub gains_db: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub seeds: Vec<u64>,
    pub records: Vec<SweepRecord>,
    /// Reasons for omitted cells or series.
    pub notes: Vec<String>,
}

impl SweepResult {
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    /// Seed-mean series for one method, one point per axis value that has records.
    pub fn series(&self, method: &str) -> Vec<SeriesPoint> {
        self.axis
            .iter()
            .filter_map(|&x| {
                let rows: Vec<&SweepRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.method == method && r.axis == x)
                    .collect();
                if rows.is_empty() {
                    return None;
                }
                let m = rows.len() as f64;
                let k = rows[0].gains_db.len();
                Some(SeriesPoint {
                    axis: x,
                    gamma_db: rows.iter().map(|r| r.gamma_db).sum::<f64>() / m,
                    gains_db: (0..k).map(|i| rows.iter().map(|r| r.gains_db[i]).sum::<f64>() / m).collect(),
                })
            })
            .collect()
    }

    pub fn point(&self, method: &str, axis: f64) -> Option<SeriesPoint> {
        self.series(method).into_iter().find(|p| p.axis == axis)
    }
}

fn record(axis: f64, method: String, seed: u64, m: &Metrics) -> SweepRecord {
    SweepRecord {
        axis,
        method,
        seed,
        gamma_db: m.snr.db,
        gains_db: m.gains_db(),
        taylor_bound_holds: None,
    }
}

pub fn proposed_id(policy: LambdaPolicy) -> String {
    format!("proposed:{policy}")
}

/// Proposed-method records for every policy, plus SDR records when enabled.
fn evaluate_cell(
    scenario: &Scenario,
    axis: f64,
    alpha: f64,
    policies: &[LambdaPolicy],
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<(Vec<SweepRecord>, Vec<String>)> {
    let channels = scenario.channels(seed);
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for &policy in policies {
        let d = design(&channels, &scenario.consts, &scenario.weights, alpha, policy)?;
        let mut r = record(axis, proposed_id(policy), seed, &d.metrics);
        r.taylor_bound_holds = Some(d.report.taylor_bound_holds());
        out.push(r);
    }
    if opts.sdr_enabled(scenario.elements()) {
        match sdr_design(scenario, &channels, &scenario.weights, alpha, seed, opts) {
            Ok(sol) => {
                let problem = SdpProblem::from_channels(&channels, &scenario.consts, vec![0.0; scenario.weights.len()])?;
                let ub = Metrics {
                    snr: crate::beamforming::Gain::from_linear(sol.relaxed_objective),
                    gains: problem
                        .psi_targets
                        .iter()
                        .map(|p| crate::beamforming::Gain::from_linear(crate::linalg::frob_inner(p, &sol.v)))
                        .collect(),
                };
                out.push(record(axis, "sdr_ub".into(), seed, &ub));
                let ex = sol.extracted.expect("extraction attached");
                out.push(record(axis, "sdr_rand".into(), seed, &ex.metrics));
            }
            Err(e @ (Error::Infeasible { .. } | Error::NonConvergence { .. })) => {
                notes.push(format!("sdr omitted at axis={axis} seed={seed}: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((out, notes))
}

fn collect_cells(
    cells: Vec<Result<(Vec<SweepRecord>, Vec<String>)>>,
) -> Result<(Vec<SweepRecord>, Vec<String>)> {
    let mut records = Vec::new();
    let mut notes = Vec::new();
    for c in cells {
        let (r, n) = c?;
        records.extend(r);
        notes.extend(n);
    }
    Ok((records, notes))
}

fn sdr_cap_note(scenario: &Scenario, opts: &ExperimentOptions) -> Option<String> {
    (opts.include_sdr && scenario.elements() > opts.sdr_cap).then(|| {
        format!(
            "sdr series omitted: N = {} exceeds sdr cap {}",
            scenario.elements(),
            opts.sdr_cap
        )
    })
}

/// Trade-off sweep over `alpha` for each regularization policy.
pub fn sweep_alpha(
    scenario: &Scenario,
    alphas: &[f64],
    policies: &[LambdaPolicy],
    opts: &ExperimentOptions,
) -> Result<SweepResult> {
    opts.check_seeds()?;
    for &a in alphas {
        crate::perturbation::validate_alpha(a)?;
    }
    let cells: Vec<(f64, u64)> = alphas
        .iter()
        .flat_map(|&a| opts.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(a, s)| evaluate_cell(scenario, a, a, policies, s, opts))
        .collect();
    let (records, mut notes) = collect_cells(results)?;
    notes.extend(sdr_cap_note(scenario, opts));
    Ok(SweepResult {
        axis_name: "alpha".into(),
        axis: alphas.to_vec(),
        seeds: opts.seeds.clone(),
        records,
        notes,
    })
}

/// Two-target fairness sweep: `zeta_1 / zeta_2 = r` for each ratio.
pub fn sweep_weight_ratio(
    scenario: &Scenario,
    ratios: &[f64],
    alpha: f64,
    policy: LambdaPolicy,
    opts: &ExperimentOptions,
) -> Result<SweepResult> {
    opts.check_seeds()?;
    if scenario.target_angles.len() != 2 {
        return Err(Error::config("targets", "the weight-ratio sweep needs exactly two targets"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::config("ratios", format!("ratios must be positive, got {r}")));
    }
    let angles: Vec<f64> = scenario.target_angles.iter().map(|t| t.to_degrees()).collect();
    let scenarios = ratios
        .iter()
        .map(|&r| {
            scenario.with_targets(vec![
                TargetSpec::at_angle(angles[0], r / (1.0 + r)),
                TargetSpec::at_angle(angles[1], 1.0 / (1.0 + r)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, u64)> = (0..ratios.len())
        .flat_map(|i| opts.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(i, s)| evaluate_cell(&scenarios[i], ratios[i], alpha, &[policy], s, opts))
        .collect();
    let (records, mut notes) = collect_cells(results)?;
    notes.extend(sdr_cap_note(scenario, opts));
    Ok(SweepResult {
        axis_name: "ratio".into(),
        axis: ratios.to_vec(),
        seeds: opts.seeds.clone(),
        records,
        notes,
    })
}

/// Expands `[lo, hi]` into equally spaced angles (degrees).
pub fn band_angles(band: (f64, f64), resolution_deg: f64) -> Result<Vec<f64>> {
    let (lo, hi) = band;
    if !(resolution_deg > 0.0) || !(hi >= lo) {
        return Err(Error::config("band", "needs lo <= hi and a positive resolution"));
    }
    let steps = (hi - lo) / resolution_deg;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::config("band_resolution", "resolution must divide the band width"));
    }
    let steps = steps.round() as usize;
    Ok((0..=steps).map(|i| lo + i as f64 * resolution_deg).collect())
}

/// Uniform scan grid from `start` to `end` (inclusive when it lands on a step).
pub fn scan_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AoaScan {
    pub band_deg: Vec<f64>,
    pub ue_angle_deg: f64,
    pub alpha: f64,
    /// Axis = scan angle (degrees); `gains_db` holds a single entry.
    pub result: SweepResult,
    /// Seed-mean gain toward the UE direction, per method.
    pub ue_gain_db: Vec<(String, f64)>,
}

/// Beampattern versus angle when the targets are spread over an angular band.
pub fn beampattern_vs_aoa(
    scenario: &Scenario,
    band: (f64, f64),
    band_resolution_deg: f64,
    scan_deg: &[f64],
    alpha: f64,
    opts: &ExperimentOptions,
) -> Result<AoaScan> {
    opts.check_seeds()?;
    let band_deg = band_angles(band, band_resolution_deg)?;
    let k = band_deg.len();
    let mut targets: Vec<TargetSpec> = band_deg.iter().map(|&a| TargetSpec::at_angle(a, 1.0 / k as f64)).collect();
    // Absorb rounding so the weights sum to one exactly.
    let rest: f64 = targets[..k - 1].iter().map(|t| t.weight).sum();
    targets[k - 1].weight = 1.0 - rest;
    let banded = scenario.with_targets(targets)?.with_alpha(alpha)?;

    let mut methods = vec![Method::CommOnly, Method::Proposed];
    let mut notes = Vec::new();
    if opts.sdr_enabled(banded.elements()) {
        methods.push(Method::Sdr);
    } else if let Some(n) = sdr_cap_note(&banded, opts) {
        notes.push(n);
    }

    let cells: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|&m| opts.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let scans = cells
        .par_iter()
        .map(|&(method, seed)| {
            let channels = banded.channels(seed);
            let phase = design_phase(&banded, &channels, method, alpha, banded.config.lambda_policy, seed, opts)?;
            let gains = scan_deg
                .iter()
                .map(|&deg| gain_toward(&banded, &channels, &phase, deg.to_radians()))
                .collect::<Result<Vec<_>>>()?;
            let ue = gain_toward(&banded, &channels, &phase, banded.theta_ue)?;
            Ok((method, seed, gains, ue))
        })
        .collect::<Vec<Result<_>>>();

    let mut records = Vec::new();
    let mut ue_sum: Vec<(String, f64)> = methods.iter().map(|m| (m.id().to_string(), 0.0)).collect();
    for cell in scans {
        let (method, seed, gains, ue) = cell?;
        for (&deg, &g) in scan_deg.iter().zip(&gains) {
            records.push(SweepRecord {
                axis: deg,
                method: method.id().into(),
                seed,
                gamma_db: f64::NAN,
                gains_db: vec![g],
                taylor_bound_holds: None,
            });
        }
        if let Some(entry) = ue_sum.iter_mut().find(|(id, _)| id == method.id()) {
            entry.1 += ue / opts.seeds.len() as f64;
        }
    }
    Ok(AoaScan {
        band_deg,
        ue_angle_deg: banded.theta_ue.to_degrees(),
        alpha,
        result: SweepResult {
            axis_name: "angle_deg".into(),
            axis: scan_deg.to_vec(),
            seeds: opts.seeds.clone(),
            records,
            notes,
        },
        ue_gain_db: ue_sum,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub n_elements: usize,
    pub method: String,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityTable {
    pub rows: Vec<TimingRow>,
    /// Least-squares slope of log(time) against log(N) for the proposed method.
    pub proposed_slope: Option<f64>,
    pub notes: Vec<String>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Near-square factorization `rows x cols = n` with `rows <= cols`.
fn ris_shape(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    (rows.max(1), n / rows.max(1))
}

/// Wall-time probe of the proposed solve (and SDR where `N <= sdr_cap`).
///
/// The scenario layout is kept; the RIS is resized to each `N` and `k`
/// equal-weight targets are spread over 60..100 degrees. Timings run
/// serially so they are not distorted by the thread pool.
pub fn run_complexity_probe(
    scenario: &Scenario,
    n_list: &[usize],
    k: usize,
    repeats: usize,
    opts: &ExperimentOptions,
) -> Result<ComplexityTable> {
    if repeats == 0 {
        return Err(Error::config("repeats", "at least one repeat is required"));
    }
    if k == 0 {
        return Err(Error::config("targets", "at least one target is required"));
    }
    opts.check_seeds()?;
    let targets: Vec<TargetSpec> = (0..k)
        .map(|i| {
            let angle = if k == 1 { 80.0 } else { 60.0 + 40.0 * i as f64 / (k - 1) as f64 };
            TargetSpec::at_angle(angle, 1.0 / k as f64)
        })
        .collect();
    let mut targets = targets;
    let rest: f64 = targets[..k - 1].iter().map(|t| t.weight).sum();
    targets[k - 1].weight = 1.0 - rest;
    let base = scenario.with_targets(targets)?;
    let alpha = base.alpha();
    let policy = base.config.lambda_policy;

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut fit = Vec::new();
    for &n in n_list {
        let (r, c) = ris_shape(n);
        let s = base.with_ris(r, c)?;
        let channels = s.channels(opts.seeds[0]);
        // Warm-up run outside the timed repeats.
        design(&channels, &s.consts, &s.weights, alpha, policy)?;
        let times = (0..repeats)
            .map(|_| {
                let t0 = Instant::now();
                let d = design(&channels, &s.consts, &s.weights, alpha, policy)?;
                std::hint::black_box(&d);
                Ok(t0.elapsed().as_secs_f64())
            })
            .collect::<Result<Vec<_>>>()?;
        let med = median(times);
        fit.push((n as f64, med));
        rows.push(TimingRow {
            n_elements: n,
            method: Method::Proposed.id().into(),
            median_seconds: med,
        });

        if opts.include_sdr && n <= opts.sdr_cap {
            let times = (0..repeats)
                .map(|_| {
                    let t0 = Instant::now();
                    let sol = sdr_design(&s, &channels, &s.weights, alpha, opts.seeds[0], opts);
                    std::hint::black_box(&sol);
                    t0.elapsed().as_secs_f64()
                })
                .collect();
            rows.push(TimingRow {
                n_elements: n,
                method: Method::Sdr.id().into(),
                median_seconds: median(times),
            });
        } else if opts.include_sdr {
            notes.push(format!("sdr timing omitted at N = {n}: above cap {}", opts.sdr_cap));
        }
    }
    Ok(ComplexityTable {
        rows,
        proposed_slope: loglog_slope(&fit),
        notes,
    })
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_file(path: &Path, body: String) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, body)?;
    Ok(())
}

/// `alpha,lambda_policy,seed,gamma_db,gain_t1_db,...`
pub fn alpha_sweep_csv(result: &SweepResult) -> String {
    let k = result.records.first().map_or(0, |r| r.gains_db.len());
    let mut out = String::from("alpha,lambda_policy,seed,gamma_db");
    for i in 1..=k {
        let _ = write!(out, ",gain_t{i}_db");
    }
    out.push('\n');
    for r in &result.records {
        let policy = r.method.strip_prefix("proposed:").unwrap_or(&r.method);
        let _ = write!(out, "{},{},{},{}", fmt_sig(r.axis), policy, r.seed, fmt_sig(r.gamma_db));
        for g in &r.gains_db {
            let _ = write!(out, ",{}", fmt_sig(*g));
        }
        out.push('\n');
    }
    out
}

/// `ratio,seed,gamma_db,gain_t1_db,gain_t2_db` (proposed method rows only).
pub fn weight_sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("ratio,seed,gamma_db,gain_t1_db,gain_t2_db\n");
    for r in result.records.iter().filter(|r| r.method.starts_with("proposed")) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(r.axis),
            r.seed,
            fmt_sig(r.gamma_db),
            fmt_sig(r.gains_db[0]),
            fmt_sig(r.gains_db[1])
        );
    }
    out
}

/// `angle_deg,method,gain_db` with seed-mean gains.
pub fn aoa_scan_csv(scan: &AoaScan) -> String {
    let mut out = String::from("angle_deg,method,gain_db\n");
    for method in scan.result.methods() {
        for p in scan.result.series(&method) {
            let _ = writeln!(out, "{},{},{}", fmt_sig(p.axis), method, fmt_sig(p.gains_db[0]));
        }
    }
    out
}

/// `x_m,y_m,gain_db`
pub fn heatmap_csv(grid: &HeatmapGrid) -> String {
    let mut out = String::from("x_m,y_m,gain_db\n");
    for c in &grid.cells {
        let _ = writeln!(out, "{},{},{}", fmt_sig(c.x_m), fmt_sig(c.y_m), fmt_sig(c.gain_db));
    }
    out
}

/// `n_elements,method,median_seconds`
pub fn complexity_csv(table: &ComplexityTable) -> String {
    let mut out = String::from("n_elements,method,median_seconds\n");
    for r in &table.rows {
        let _ = writeln!(out, "{},{},{}", r.n_elements, r.method, fmt_sig(r.median_seconds));
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, body: String) -> Result<()> {
    write_file(path.as_ref(), body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-3.0), "-3");
        assert_eq!(fmt_sig(28.123456789123), "28.1234568");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(123456789.4), "123456789");
        assert_eq!(fmt_sig(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn band_expansion() {
        let b = band_angles((85.0, 95.0), 1.0).unwrap();
        assert_eq!(b.len(), 11);
        assert_eq!(b[0], 85.0);
        assert_eq!(b[10], 95.0);
        assert!(band_angles((85.0, 95.0), 3.0).is_err());
        assert_eq!(scan_grid(-1.0, 1.0, 0.5).len(), 5);
    }

    #[test]
    fn grid_cells() {
        let g = GridSpec::new((0.0, 120.0), (-40.0, 40.0), 10, 10).unwrap();
        assert_eq!(g.centres().len(), 100);
        let g = GridSpec::with_resolution((0.0, 10.0), (0.0, 5.0), 2.0).unwrap();
        assert_eq!((g.nx, g.ny), (5, 3));
        assert!(GridSpec::new((1.0, 0.0), (0.0, 1.0), 2, 2).is_err());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }

    #[test]
    fn near_square_shapes() {
        assert_eq!(ris_shape(64), (8, 8));
        assert_eq!(ris_shape(128), (8, 16));
        assert_eq!(ris_shape(512), (16, 32));
        assert_eq!(ris_shape(7), (1, 7));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("comm-only".parse::<Method>().unwrap(), Method::CommOnly);
        assert_eq!("sdr".parse::<Method>().unwrap(), Method::Sdr);
        assert!("greedy".parse::<Method>().is_err());
    }
}
