mod common;

use common::*;
use limitflow_core::bounds::*;
use limitflow_core::coefficients::CoefficientModel;
use limitflow_core::companion::CompanionSystem;
use limitflow_core::discretize::*;
use limitflow_core::linalg::OperatorNorm;
use limitflow_core::math::{exp, ln, re};
use limitflow_core::residues::*;
use limitflow_core::spectrum::*;

const TOL: f64 = 1e-12;
const RING: f64 = 1e-6;

struct Run {
    spectrum: LimitingSpectrum,
    data: MeromorphicData,
    epsilon: f64,
    x: SampleSolution,
    x_star: SampleSolution,
}

fn analyze(sys: &CompanionSystem, z0: &[f64], period: f64, count: usize) -> Run {
    let limit = sys.limiting_matrix().unwrap();
    let (phi, _) = limiting_stepper(&limit, period).unwrap();
    let spectrum = LimitingSpectrum::new(&limit, period, 1e-6).unwrap();
    let x = sample_trajectory(sys, &reals(z0), period, count, TOL).unwrap();
    let data = meromorphic_data(&x.values, &phi.row(0), 200.min(count - 3), spectrum.mu, noise_floor_for(TOL)).unwrap();
    let epsilon = choose_epsilon(&spectrum, data.correction.nu_hat, RING).unwrap();
    let x_star = dominant_sequence(&spectrum, &data, count, RING).unwrap();
    Run { spectrum, data, epsilon, x, x_star }
}

#[test]
fn flagship_expansion_remainder_and_cycle() {
    for period in [0.25, 0.5] {
        let run = analyze(&flagship(), &[1.0, 0.0], period, 203);
        let rep = expansion_check(&run.x, &run.x_star, run.spectrum.mu, run.epsilon, (20, 120), false).unwrap();
        assert!(rep.pass, "T={period}: slope {:?} above {}", rep.slope, rep.threshold);
        assert!(!rep.vacuous);
        for k in [10, 20, 40] {
            let r = remainder_bound(&run.data, run.spectrum.mu - run.epsilon, k, 512);
            assert!(r.pass, "T={period} k={k}: {r:?}");
            // nodes must resolve poles sitting ε from both circles
            let c = cycle_identity_residual(&run.spectrum, &run.data, run.epsilon, k, 8192, RING).unwrap();
            assert!(c <= 1e-8, "T={period} k={k}: cycle residual {c:e}");
        }
        // a nonzero dominant projection keeps the limiting solution alive
        assert!(run.x_star.values[50].norm() > 1e-6);
    }
}

#[test]
fn time_varying_schedule_tracks_target_times() {
    let sys = flagship();
    let mut errs = Vec::new();
    for t in (20..=120).step_by(5).map(|k| k as f64 * 0.5) {
        let k_t = (t / 0.5_f64).ceil() as usize;
        let period = sampling_for(t, k_t).unwrap();
        let run = analyze(&sys, &[1.0, 0.0], period, k_t + 3);
        errs.push((k_t, (run.x.values[k_t] - run.x_star.values[k_t]).norm(), run.spectrum.mu - run.epsilon));
    }
    let xs: Vec<f64> = errs.iter().map(|e| e.0 as f64).collect();
    let ys: Vec<f64> = errs.iter().map(|e| ln(e.1)).collect();
    let (slope, _) = limitflow_core::math::linear_fit(&xs, &ys).unwrap();
    assert!(slope <= ln(errs[0].2) + 0.05, "slope {slope}");
}

#[test]
fn residues_match_closed_forms_on_scenario_poles() {
    let run = analyze(&perturbed_system(&[1.1, 0.3], &[0.2, 0.1], 1.0), &[1.0, -0.5], 0.5, 120);
    for root in &run.spectrum.roots {
        let closed = characteristic_solution(&run.data, root, 7).unwrap();
        let r = 0.3 * run.spectrum.roots.iter().filter(|o| o.value != root.value).map(|o| (o.value - root.value).norm()).fold(1.0, f64::min);
        let g = |z| run.data.integrand(7, z);
        let contour = residue_contour(&g, root.value, r, 512).unwrap();
        assert!((closed - contour).norm() <= 1e-9 * (1.0 + closed.norm()));
    }
}

#[test]
fn parametric_error_decays_at_coefficient_rate() {
    for sigma in [0.5, 1.0, 2.0] {
        for kind in 0..2 {
            let c = if kind == 0 {
                CoefficientModel::exp_perturbed(1, re(1.0), re(0.5), sigma).unwrap()
            } else {
                CoefficientModel::exp_approach(1, re(1.0), sigma, 0.0).unwrap()
            };
            let sys = CompanionSystem::new(vec![CoefficientModel::constant(0, re(1.0)), c, CoefficientModel::constant(2, re(0.5))]).unwrap();
            let b = build_bundle(&sys, 0.5, 60, 1e-11).unwrap();
            let fit = fit_error_decay(&b.steppers, 1, &b.limiting_stepper, OperatorNorm::Inf, DEFAULT_STEPPER_FLOOR).unwrap();
            let expect = -sigma * 0.5;
            assert!((ln(fit.rho_tilde) - expect).abs() <= 0.15 * expect.abs(), "σ={sigma}: {}", fit.rho_tilde);
        }
    }
}

fn bound_suite(sys: &CompanionSystem, z0: &[f64], period: f64) -> (ContractionEstimates, SupBound, Vec<IncrementBound>) {
    let n = sys.order();
    let b = build_bundle(sys, period, 220, 1e-11).unwrap();
    let est = ContractionEstimates::fit(&b.steppers, n - 1, &b.limiting_stepper, 200, OperatorNorm::Inf).unwrap();
    let w = initial_window(sys, &reals(z0), period, 1e-11).unwrap();
    let x = run_difference(Stepper::Sequence(&b.steppers), &w, 210, period).unwrap();
    let x_star = run_difference(Stepper::Constant(&b.limiting_stepper), &w, 210, period).unwrap();
    let norms = window_norms(&x, est.norm);
    let i = check_boundedness_31i(&est, 5, 10, &norms[..200]);
    assert!(i.status.acceptable());
    let increments = [5, 10, 20]
        .iter()
        .map(|&k| {
            let (errs, sup) = anchored_errors(&x, &b.limiting_stepper, k, 10, est.norm).unwrap();
            error_bound_31ii(&est, k, 10, sup, &errs)
        })
        .collect();
    let errs = error_norms(&x, &x_star, est.norm);
    let star_sup = window_norms(&x_star, est.norm)[..200].iter().copied().fold(0.0, f64::max);
    let sup = sup_error_bound_31iii(&est, n - 1, star_sup, &errs[..200]);
    (est, sup, increments)
}

#[test]
fn contraction_bounds_hold_where_applicable() {
    let (est, sup, inc) = bound_suite(&flagship(), &[1.0, 0.0], 0.5);
    assert!(est.k_star >= 1.0 && est.rho_star < 1.0 && est.rho_tilde < 1.0);
    // companion shift rows force K*ρ* ≥ 1 in every induced norm
    assert_eq!(sup.status, BoundStatus::HypothesesUnmet);
    assert!(inc.iter().all(|r| r.status == BoundStatus::Checked { ok: true }), "{inc:?}");

    let scalar = CompanionSystem::new(vec![
        CoefficientModel::constant(0, re(1.0)),
        CoefficientModel::exp_perturbed(1, re(0.5), re(0.1), 2.0).unwrap(),
    ])
    .unwrap();
    let (est, sup, inc) = bound_suite(&scalar, &[1.0], 0.5);
    assert!((est.rho_tilde - exp(-1.0)).abs() < 0.05);
    assert_eq!(sup.status, BoundStatus::Checked { ok: true }, "{sup:?}");
    assert!(sup.tends_to_zero);
    assert!(inc.iter().all(|r| r.status == BoundStatus::Checked { ok: true }), "{inc:?}");
}

#[test]
fn exp_approach_solutions_decay_with_their_limit() {
    let sys = CompanionSystem::new(vec![
        CoefficientModel::constant(0, re(1.0)),
        CoefficientModel::exp_approach(1, re(1.5), 2.0, 0.0).unwrap(),
        CoefficientModel::exp_approach(2, re(0.5), 2.0, 0.0).unwrap(),
    ])
    .unwrap();
    let x = sample_trajectory(&sys, &reals(&[1.0, 0.0]), 0.5, 81, TOL).unwrap();
    let limit = sys.limiting_system().unwrap();
    let x_star = sample_trajectory(&limit, &reals(&[1.0, 0.0]), 0.5, 81, TOL).unwrap();
    assert!(x.values.iter().chain(&x_star.values).all(|v| v.norm().is_finite()));
    assert!(x.values[80].norm() < 1e-6 && x_star.values[80].norm() < 1e-6);
}
