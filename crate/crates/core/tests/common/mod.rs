#![allow(dead_code)]

use limitflow_core::coefficients::CoefficientModel;
use limitflow_core::companion::CompanionSystem;
use limitflow_core::linalg::CMatrix;
use limitflow_core::math::{re, Complex64};

/// `x⁽ⁿ⁾ + α_1 x⁽ⁿ⁻¹⁾ + … + α_n x = 0` with constant `α_i`.
pub fn constant_system(alphas: &[f64]) -> CompanionSystem {
    let mut coeffs = vec![CoefficientModel::constant(0, re(1.0))];
    coeffs.extend(alphas.iter().enumerate().map(|(i, &a)| CoefficientModel::constant(i + 1, re(a))));
    CompanionSystem::new(coeffs).unwrap()
}

/// `α_i(t) = limit_i + amplitude_i e^{−rate·t}`.
pub fn perturbed_system(limits: &[f64], amplitudes: &[f64], rate: f64) -> CompanionSystem {
    let mut coeffs = vec![CoefficientModel::constant(0, re(1.0))];
    for (i, (&l, &c)) in limits.iter().zip(amplitudes).enumerate() {
        coeffs.push(CoefficientModel::exp_perturbed(i + 1, re(l), re(c), rate).unwrap());
    }
    CompanionSystem::new(coeffs).unwrap()
}

/// Limiting eigenvalues −0.05 and −0.3, perturbations decaying at rate 0.5.
pub fn flagship() -> CompanionSystem {
    perturbed_system(&[0.35, 0.015], &[0.2, 0.1], 0.5)
}

pub fn reals(v: &[f64]) -> Vec<Complex64> {
    v.iter().copied().map(re).collect()
}

/// Scaled Taylor series squared back up; independent of the Padé path.
pub fn expm_taylor(m: &CMatrix, t: f64) -> CMatrix {
    let a = m.scale_real(t);
    let norm = a.norm_inf();
    let mut s = 0;
    while norm / f64::powi(2.0, s) > 0.25 {
        s += 1;
    }
    let small = a.scale_real(f64::powi(2.0, -s));
    let mut term = CMatrix::identity(m.rows());
    let mut sum = term.clone();
    for j in 1..40 {
        term = term.matmul(&small).scale_real(1.0 / j as f64);
        sum = &sum + &term;
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
