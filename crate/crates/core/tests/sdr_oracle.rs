mod common;

use common::*;
use ris_isac::perturbation::comm_optimal_phase;
use ris_isac::rng::SimRng;
use ris_isac::sdr::{quadratic_form, solve_and_extract, solve_sdp, AdmmSettings, SdpProblem, RANDOMIZATION_SLACK};

/// Best random-search SNR among unit-modulus vectors meeting every gain demand.
fn random_search(problem: &SdpProblem, samples: usize, rng: &mut SimRng) -> f64 {
    let n = problem.elements();
    let mut best = 0.0f64;
    for _ in 0..samples {
        let v = random_unit(n, rng);
        let feasible = problem
            .psi_targets
            .iter()
            .zip(&problem.desired_gains)
            .all(|(p, &d)| quadratic_form(p, &v) >= d);
        if feasible {
            best = best.max(quadratic_form(&problem.psi_ue, &v));
        }
    }
    best
}

#[test]
fn relaxation_bounds_random_search_at_n8() {
    let settings = AdmmSettings::default();
    for seed in 0..4u64 {
        let mut rng = SimRng::seed_from(seed);
        let ch = random_channels(8, 2, 4, &mut rng);
        let c = test_consts();
        let base = SdpProblem::from_channels(&ch, &c, vec![0.0, 0.0]).unwrap();
        let full = c.gain_scale() * 64.0;
        let problem = SdpProblem::new(base.psi_ue.clone(), base.psi_targets.clone(), vec![0.15 * full, 0.15 * full]).unwrap();

        let sol = solve_and_extract(&problem, &settings, 100, seed).unwrap();
        let searched = random_search(&problem, 20_000, &mut rng);
        assert!(searched > 0.0, "seed {seed}: random search found a feasible point");
        assert!(sol.relaxed_objective >= searched * (1.0 - 1e-4), "seed {seed}: {} < {searched}", sol.relaxed_objective);
        let ex = sol.extracted.as_ref().unwrap();
        assert!(sol.relaxed_objective >= ex.metrics.snr.linear * (1.0 - 1e-4));
        assert!(ex.phase.vector().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        if ex.feasible {
            for (g, d) in ex.metrics.gains.iter().zip(&problem.desired_gains) {
                assert!(g.linear >= (1.0 - RANDOMIZATION_SLACK) * d);
            }
        }
    }
}

#[test]
fn unconstrained_relaxation_is_tight() {
    let mut rng = SimRng::seed_from(77);
    let ch = random_channels(8, 1, 4, &mut rng);
    let c = test_consts();
    let problem = SdpProblem::from_channels(&ch, &c, vec![0.0]).unwrap();
    let sol = solve_sdp(&problem, &AdmmSettings::default()).unwrap();
    let v_star = comm_optimal_phase(&ch.h_ue, &ch.g2).unwrap().vector();
    let best = quadratic_form(&problem.psi_ue, &v_star);
    assert!(rel_diff(sol.relaxed_objective, best) < 1e-3, "{} vs {best}", sol.relaxed_objective);
    assert!(sol.diag_residual < 1e-3);
    assert!(sol.min_eigenvalue() > -1e-9 * sol.v.norm());
}
