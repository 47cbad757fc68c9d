mod common;

use common::*;
use limitflow_core::coefficients::CoefficientModel;
use limitflow_core::companion::{build_companion, CompanionSystem, LinearSystem};
use limitflow_core::discretize::{build_bundle, run_difference, sample_trajectory, Stepper};
use limitflow_core::linalg::{eigenvalues, CMatrix};
use limitflow_core::math::{c64, exp, re, Complex64};
use limitflow_core::poly::Poly;
use limitflow_core::propagate::{integrate, matrix_exponential, relative_gap, semigroup_residual};
use limitflow_core::residues::{characteristic_solution, meromorphic_data, noise_floor_for, residue_closed_form, residue_contour};
use limitflow_core::spectrum::LimitingSpectrum;
use proptest::prelude::*;

fn complex_in(r_lo: f64, r_hi: f64) -> impl Strategy<Value = Complex64> {
    (r_lo..r_hi, 0.0..std::f64::consts::TAU).prop_map(|(r, th)| c64(r * th.cos(), r * th.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_kinds_approach_their_limits(limit in -2.0..2.0f64, amp in -2.0..2.0f64, rate in 0.05..3.0f64, onset in 0.0..2.0f64, t in 0.0..20.0f64) {
        let p = CoefficientModel::exp_perturbed(1, re(limit), re(amp), rate).unwrap();
        let gap = (p.eval(t).unwrap() - p.limit().unwrap()).norm();
        prop_assert!(gap <= amp.abs() * exp(-rate * t) * (1.0 + 1e-12) + 4.0 * f64::EPSILON * (limit.abs() + amp.abs()));
        let a = CoefficientModel::exp_approach(1, re(limit), rate, onset).unwrap();
        if t >= onset {
            let gap = (a.eval(t).unwrap() - a.limit().unwrap()).norm();
            prop_assert!(gap <= limit.abs() * (exp(-rate * (t - onset)) * (1.0 + 1e-12) + 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn companion_eigenvalues_are_roots(alphas in prop::collection::vec(-3.0..3.0f64, 1..5), t in 0.0..5.0f64) {
        let amps: Vec<f64> = alphas.iter().map(|a| 0.3 * a).collect();
        let sys = perturbed_system(&alphas, &amps, 0.7);
        let a = sys.build(t).unwrap();
        let mut desc = vec![re(1.0)];
        desc.extend(sys.coefficients()[1..].iter().map(|m| m.eval(t).unwrap()));
        let p = Poly::from_monic_descending(&desc[1..]);
        let scale: f64 = desc.iter().map(|c| c.norm()).sum();
        for lam in eigenvalues(&a).unwrap() {
            let size: f64 = (0..desc.len()).map(|j| lam.norm().powi(j as i32)).sum();
            prop_assert!(p.eval(lam).norm() <= 1e-8 * scale * size);
        }
        let limit = sys.limiting_matrix().unwrap();
        let drift: f64 = sys.coefficients()[1..].iter().map(|m| (m.eval(t).unwrap() - m.limit().unwrap()).norm()).sum();
        prop_assert!((&a - &limit).norm_inf() <= drift * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn exponential_splits_and_matches_taylor(entries in prop::collection::vec(-1.2..1.2f64, 9), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let m = CMatrix::from_fn(3, 3, |i, j| re(entries[3 * i + j]));
        prop_assume!(m.norm_inf() <= 5.0);
        let whole = matrix_exponential(&m, t1 + t2).unwrap();
        let split = matrix_exponential(&m, t1).unwrap().matmul(&matrix_exponential(&m, t2).unwrap());
        prop_assert!(relative_gap(&whole, &split) <= 1e-10);
        prop_assert!(relative_gap(&whole, &expm_taylor(&m, t1 + t2)) <= 1e-12);
    }

    #[test]
    fn spectral_mapping_of_distinct_eigenvalues(l1 in -2.0..0.5f64, l2 in -2.0..0.5f64, period in 0.05..1.0f64) {
        prop_assume!((l1 - l2).abs() > 0.05);
        let sys = constant_system(&[-(l1 + l2), l1 * l2]);
        let s = LimitingSpectrum::new(&sys.limiting_matrix().unwrap(), period, 1e-6).unwrap();
        for lam in [l1, l2] {
            let target = exp(lam * period);
            prop_assert!(s.roots.iter().any(|r| (r.value - re(target)).norm() <= 1e-8));
        }
    }

    #[test]
    fn residues_agree_with_contours(
        poles in prop::collection::vec((complex_in(0.1, 2.0), 1usize..=3), 1..4),
        numer in prop::collection::vec(complex_in(0.0, 2.0), 1..4),
    ) {
        let sep = poles.iter().enumerate().flat_map(|(i, a)| poles[i + 1..].iter().map(move |b| (a.0 - b.0).norm())).fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 0.1);
        let den = Poly::from_roots(&poles);
        let num = Poly::new(numer);
        for &(p, m) in &poles {
            let closed = residue_closed_form(&num, &den, p, m).unwrap();
            let r = 0.4 * sep.min(1.0);
            // factored denominator: the expanded form cancels badly near clustered roots
            let g = |z: Complex64| num.eval(z) / poles.iter().map(|&(q, mq)| (z - q).powi(mq as i32)).product::<Complex64>();
            let contour = residue_contour(&g, p, r, 512).unwrap();
            prop_assert!((closed - contour).norm() <= 1e-9 * (1.0 + closed.norm()), "closed {closed} contour {contour}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn semigroup_composition(t in 0.5..4.0f64, frac in 0.05..0.95f64, amp in -0.5..0.5f64) {
        let sys = perturbed_system(&[0.6, 0.2], &[amp, -amp], 0.8);
        let tol = 1e-10;
        prop_assert!(semigroup_residual(&sys, t, frac * t, tol).unwrap() <= 20.0 * tol);
    }

    #[test]
    fn sampled_equivalence(n in 1usize..=3, period_ix in 0usize..3, z in prop::collection::vec(-1.0..1.0f64, 3), amp in -0.4..0.4f64) {
        let period = [0.05, 0.1, 0.5][period_ix];
        let limits = [0.9, 0.4, 0.05];
        let amps = [amp, 0.5 * amp, -amp];
        let sys = perturbed_system(&limits[..n], &amps[..n], 1.0);
        let z0 = reals(&z[..n]);
        let exact = sample_trajectory(&sys, &z0, period, 50 + n, 1e-11).unwrap();
        let b = build_bundle(&sys, period, 50, 1e-11).unwrap();
        let w = exact.window(n - 1).unwrap();
        let diff = run_difference(Stepper::Sequence(&b.steppers), &w, 50, period).unwrap();
        prop_assert!(max_abs_diff(&diff.values, &exact.values) <= 1e-6);
    }

    #[test]
    fn window_maps_recover_states(period in 0.1..0.8f64, k in 1usize..12, z in prop::collection::vec(-1.0..1.0f64, 2)) {
        let sys = flagship();
        let z0 = reals(&z);
        let grid: Vec<f64> = (0..=k + 1).map(|i| i as f64 * period).collect();
        let tr = integrate(&sys, &z0, &grid, 1e-11).unwrap();
        let b = build_bundle(&sys, period, k + 1, 1e-11).unwrap();
        let xs = tr.first_component();
        let w = vec![xs[k], xs[k - 1]];
        let state = b.map(k).unwrap().lu().unwrap().solve_vec(&w);
        prop_assert!(max_abs_diff(&state, &tr.states[k - 1]) <= 1e-7);
    }

    #[test]
    fn double_pole_has_linear_prefactor(a in 0.2..1.0f64, period in 0.1..1.0f64, z in prop::collection::vec(-1.0..1.0f64, 2)) {
        prop_assume!(z[0].abs() + z[1].abs() > 0.1);
        let sys = constant_system(&[2.0 * a, a * a]);
        let limit = sys.limiting_matrix().unwrap();
        let spec = LimitingSpectrum::new(&limit, period, 1e-6).unwrap();
        prop_assert_eq!(spec.roots.len(), 1);
        prop_assert_eq!(spec.roots[0].multiplicity, 2);
        let samples = sample_trajectory(&sys, &reals(&z), period, 40, 1e-12).unwrap();
        let b = build_bundle(&sys, period, 1, 1e-12).unwrap();
        let data = meromorphic_data(&samples.values, &b.limiting_row(), 30, spec.mu, noise_floor_for(1e-12)).unwrap();
        let lam = spec.roots[0].value;
        let p: Vec<Complex64> = (5..11).map(|k| characteristic_solution(&data, &spec.roots[0], k).unwrap() / lam.powi(k as i32)).collect();
        let scale = p.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for w in p.windows(3) {
            prop_assert!((w[0] - w[1] * 2.0 + w[2]).norm() <= 1e-8 * scale);
        }
    }
}

#[test]
fn build_companion_rejects_non_monic() {
    let coeffs = vec![CoefficientModel::constant(0, re(2.0)), CoefficientModel::constant(1, re(1.0))];
    assert!(build_companion(&coeffs, 0.0).is_err());
    assert!(CompanionSystem::new(coeffs).is_err());
    assert_eq!(flagship().dim(), 2);
}
