//! Exact sampled difference systems `w_{k+1} = Φ_k w_k` and their limit.
//!
//! Index convention: `M_k` maps the state `z((k−n+1)T)` to the window
//! `w_k = (x_k, x_{k−1}, …, x_{k−n+1})ᵀ`, and
//! `Φ_k = M_{k+1} Ψ((k−n+2)T, (k−n+1)T) M_k⁻¹`.
//! Rows `2..n` of every `Φ_k` are the exact shift `e_{j−1}ᵀ`; only the first
//! row carries information.

use alloc::vec;
use alloc::vec::Vec;

use crate::companion::{CompanionSystem, LinearSystem};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::math::Complex64;
use crate::propagate::{evolution_operator, integrate, matrix_exponential};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rejection threshold for the one-norm condition number of a window map.
pub const MAX_CONDITION: f64 = 1e14;

/// `E`: block diagonal of `n` copies of `e₁ᵀ`, shape `n × n²`.
pub fn build_selector(n: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n * n);
    for i in 0..n {
        e[(i, i * n)] = ONE;
    }
    e
}

fn guard(m: CMatrix, k: usize) -> Result<CMatrix> {
    let condition = m.condition_one();
    let det = m.det().norm();
    if !(condition <= MAX_CONDITION) || det <= 1e-300 {
        return Err(Error::SingularMap { k, condition });
    }
    Ok(m)
}

/// Window map from the stack `[Ψ_{n−1}; …; Ψ_1; I]`, where `Ψ_i` spans `i` periods.
fn window_from_spans(spans: &[CMatrix], k: usize) -> Result<CMatrix> {
    // spans[i] = Ψ((b+i)T, bT), i = 0..n−1
    let n = spans.len();
    let stack: Vec<CMatrix> = (0..n).rev().map(|i| spans[i].clone()).collect();
    let full = CMatrix::vstack(&stack);
    guard(build_selector(n).matmul(&full), k)
}

/// `M_k` for `k ≥ n−1`.
pub fn build_window_map(system: &CompanionSystem, period: f64, k: usize, tol: f64) -> Result<CMatrix> {
    let n = system.order();
    if k + 1 < n {
        return Err(Error::InvalidArgument("window maps start at k = n - 1"));
    }
    check_period(period)?;
    let base = (k + 1 - n) as f64 * period;
    let spans = (0..n)
        .map(|i| {
            let t = (k + 1 - n + i) as f64 * period;
            evolution_operator(system, t, base, tol).map(|op| op.matrix)
        })
        .collect::<Result<Vec<_>>>()?;
    window_from_spans(&spans, k)
}

fn stepper_from(first_row: &[Complex64]) -> CMatrix {
    let n = first_row.len();
    let mut phi = CMatrix::zeros(n, n);
    phi.set_row(0, first_row);
    for i in 1..n {
        phi[(i, i - 1)] = ONE;
    }
    phi
}

/// First row of `span · M⁻¹`, the only free row of the stepper.
fn stepper_row(span_first_row: &[Complex64], map: &CMatrix) -> Result<Vec<Complex64>> {
    let n = span_first_row.len();
    let row = CMatrix::from_row_major(1, n, span_first_row.to_vec());
    let solved = map.transpose().solve(&row.transpose())?;
    Ok(solved.col(0))
}

/// `Φ_k` for `k ≥ n−1`.
pub fn build_stepper(system: &CompanionSystem, period: f64, k: usize, tol: f64) -> Result<CMatrix> {
    let n = system.order();
    let map = build_window_map(system, period, k, tol)?;
    let base = (k + 1 - n) as f64 * period;
    let span = evolution_operator(system, (k + 1) as f64 * period, base, tol)?.matrix;
    Ok(stepper_from(&stepper_row(&span.row(0), &map)?))
}

fn check_period(period: f64) -> Result<()> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("sampling period must be positive"))
    }
}

/// Sampled difference system on a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationBundle {
    pub period: f64,
    pub order: usize,
    /// `M_k` for `k = n−1, …, n−1+steps`.
    pub maps: Vec<CMatrix>,
    /// `Φ_k` for `k = n−1, …, n−2+steps`.
    pub steppers: Vec<CMatrix>,
    pub limiting_stepper: CMatrix,
    pub limiting_map: CMatrix,
}

impl DiscretizationBundle {
    /// `Φ_k` by its absolute index.
    pub fn stepper(&self, k: usize) -> Option<&CMatrix> {
        k.checked_sub(self.order - 1).and_then(|i| self.steppers.get(i))
    }

    pub fn map(&self, k: usize) -> Option<&CMatrix> {
        k.checked_sub(self.order - 1).and_then(|i| self.maps.get(i))
    }

    /// `(φ*_1, …, φ*_n)`.
    pub fn limiting_row(&self) -> Vec<Complex64> {
        self.limiting_stepper.row(0)
    }
}

/// One-step operators `Ψ((i+1)T, iT)` for `i < count`.
pub fn one_step_operators<S: LinearSystem + ?Sized>(system: &S, period: f64, count: usize, tol: f64) -> Result<Vec<CMatrix>> {
    check_period(period)?;
    (0..count)
        .map(|i| {
            let from = i as f64 * period;
            let to = (i + 1) as f64 * period;
            evolution_operator(system, to, from, tol).map(|op| op.matrix)
        })
        .collect()
}

/// `Φ*` and `M*` from `P* = e^{A*T}`.
pub fn limiting_stepper(limit: &CMatrix, period: f64) -> Result<(CMatrix, CMatrix)> {
    check_period(period)?;
    let n = limit.rows();
    let p = matrix_exponential(limit, period)?;
    let mut spans = Vec::with_capacity(n + 1);
    spans.push(CMatrix::identity(n));
    for i in 1..=n {
        let next = p.matmul(&spans[i - 1]);
        spans.push(next);
    }
    let map = window_from_spans(&spans[..n], 0)?;
    let phi = stepper_from(&stepper_row(&spans[n].row(0), &map)?);
    Ok((phi, map))
}

/// `Φ_k` for `steps` consecutive indices starting at `k = n−1`, plus the limit.
pub fn build_bundle(system: &CompanionSystem, period: f64, steps: usize, tol: f64) -> Result<DiscretizationBundle> {
    let n = system.order();
    let ops = one_step_operators(system, period, steps + n - 1, tol)?;
    let mut maps = Vec::with_capacity(steps + 1);
    let mut steppers = Vec::with_capacity(steps);
    for b in 0..=steps {
        // spans[i] = Ψ((b+i)T, bT)
        let mut spans = vec![CMatrix::identity(n)];
        for i in 1..n {
            let next = ops[b + i - 1].matmul(&spans[i - 1]);
            spans.push(next);
        }
        let k = b + n - 1;
        let map = window_from_spans(&spans, k)?;
        if b < steps {
            let span = ops[b + n - 1].matmul(&spans[n - 1]);
            steppers.push(stepper_from(&stepper_row(&span.row(0), &map)?));
        }
        maps.push(map);
    }
    let (limiting_stepper, limiting_map) = limiting_stepper(&system.limiting_matrix()?, period)?;
    Ok(DiscretizationBundle {
        period,
        order: n,
        maps,
        steppers,
        limiting_stepper,
        limiting_map,
    })
}

/// A difference-system driver: either the limiting `Φ*` or a time-varying sequence.
#[derive(Debug, Clone, Copy)]
pub enum Stepper<'a> {
    Constant(&'a CMatrix),
    /// `seq[i]` advances `w_{n−1+i}`.
    Sequence(&'a [CMatrix]),
}

/// Scalar samples `x_k = x(kT)` of a difference-system solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSolution {
    pub period: f64,
    pub order: usize,
    pub values: Vec<Complex64>,
}

impl SampleSolution {
    /// `w_k = (x_k, …, x_{k−n+1})ᵀ`, defined for `k ≥ n−1`.
    pub fn window(&self, k: usize) -> Option<Vec<Complex64>> {
        if k + 1 < self.order || k >= self.values.len() {
            return None;
        }
        Some((0..self.order).map(|j| self.values[k - j]).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Iterate `w_{k+1} = Φ_k w_k` from `w_{n−1} = w_init` for `steps` steps.
pub fn run_difference(stepper: Stepper<'_>, w_init: &[Complex64], steps: usize, period: f64) -> Result<SampleSolution> {
    let n = w_init.len();
    if n == 0 {
        return Err(Error::InvalidArgument("window must be nonempty"));
    }
    if let Stepper::Sequence(seq) = stepper {
        if seq.len() < steps {
            return Err(Error::DimensionMismatch {
                expected: steps,
                found: seq.len(),
            });
        }
    }
    let mut values: Vec<Complex64> = w_init.iter().rev().copied().collect();
    let mut w = w_init.to_vec();
    for i in 0..steps {
        let phi = match stepper {
            Stepper::Constant(m) => m,
            Stepper::Sequence(seq) => &seq[i],
        };
        if phi.rows() != n || phi.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: phi.rows() });
        }
        let next = phi.row(0).iter().zip(&w).fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b);
        w.rotate_right(1);
        w[0] = next;
        values.push(next);
    }
    Ok(SampleSolution {
        period,
        order: n,
        values,
    })
}

/// `T_t = t / k_t`.
pub fn sampling_for(t: f64, k_t: usize) -> Result<f64> {
    if k_t == 0 {
        return Err(Error::ZeroSteps);
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument("target time must be positive"));
    }
    Ok(t / k_t as f64)
}

/// Integrator samples `x(kT)` for `k = 0..count`.
pub fn sample_trajectory<S: LinearSystem + ?Sized>(system: &S, z0: &[Complex64], period: f64, count: usize, tol: f64) -> Result<SampleSolution> {
    check_period(period)?;
    let grid: Vec<f64> = (0..count.max(1)).map(|k| k as f64 * period).collect();
    let tr = integrate(system, z0, &grid, tol)?;
    Ok(SampleSolution {
        period,
        order: system.dim(),
        values: tr.first_component().into_iter().take(count).collect(),
    })
}

/// `w_{n−1}` taken from integrator samples.
pub fn initial_window<S: LinearSystem + ?Sized>(system: &S, z0: &[Complex64], period: f64, tol: f64) -> Result<Vec<Complex64>> {
    let n = system.dim();
    let samples = sample_trajectory(system, z0, period, n, tol)?;
    Ok(samples.window(n - 1).expect("n samples present"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::math::{ln, re};

    fn consts(values: &[f64]) -> CompanionSystem {
        CompanionSystem::new(values.iter().enumerate().map(|(i, &v)| CoefficientModel::constant(i, re(v))).collect()).unwrap()
    }

    #[test]
    fn selector_pattern() {
        assert_eq!(build_selector(1), CMatrix::identity(1));
        assert_eq!(build_selector(2), CMatrix::from_real_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]));
        let e3 = build_selector(3);
        for i in 0..3 {
            for j in 0..9 {
                let expect = if j == 3 * i { 1.0 } else { 0.0 };
                assert_eq!(e3[(i, j)], re(expect));
            }
        }
    }

    #[test]
    fn scalar_maps_and_steppers() {
        let sys = consts(&[1.0, 1.0]);
        assert_eq!(build_window_map(&sys, 0.3, 5, 1e-10).unwrap(), CMatrix::identity(1));
        let phi = build_stepper(&sys, ln(2.0), 3, 1e-10).unwrap();
        assert!((phi[(0, 0)] - re(0.5)).norm() < 1e-10);
    }

    #[test]
    fn constant_window_map_row() {
        let sys = consts(&[1.0, 3.0, 2.0]);
        let a = sys.limiting_matrix().unwrap();
        let e = matrix_exponential(&a, 0.1).unwrap();
        let m = build_window_map(&sys, 0.1, 4, 1e-10).unwrap();
        for j in 0..2 {
            assert!((m[(0, j)] - e[(0, j)]).norm() < 1e-9);
        }
        assert_eq!(m.row(1), vec![re(1.0), re(0.0)]);
    }

    #[test]
    fn small_period_stepper_near_shift_structure() {
        let sys = consts(&[1.0, 3.0, 2.0]);
        let phi = build_stepper(&sys, 1e-3, 1, 1e-12).unwrap();
        // w_{k+1} ≈ w_k for tiny T, so the first row tends to (2, −1)
        assert!((phi[(0, 0)] - re(2.0)).norm() < 1e-2);
        assert!((phi[(0, 1)] - re(-1.0)).norm() < 1e-2);
    }

    #[test]
    fn difference_examples() {
        let half = CMatrix::from_real_rows(&[[0.5]]);
        let s = run_difference(Stepper::Constant(&half), &[re(1.0)], 3, 1.0).unwrap();
        assert_eq!(s.values, vec![re(1.0), re(0.5), re(0.25), re(0.125)]);
        let phi = CMatrix::from_real_rows(&[[1.2, -0.3], [1.0, 0.0]]);
        let z = run_difference(Stepper::Constant(&phi), &[re(0.0), re(0.0)], 10, 1.0).unwrap();
        assert!(z.values.iter().all(|v| *v == re(0.0)));
        assert_eq!(z.window(5).unwrap().len(), 2);
    }

    #[test]
    fn sampling_periods() {
        assert_eq!(sampling_for(10.0, 100).unwrap(), 0.1);
        assert_eq!(sampling_for(1.0, 1).unwrap(), 1.0);
        assert!((sampling_for(7.3, 73).unwrap() - 0.1).abs() < 1e-16);
        assert_eq!(sampling_for(1.0, 0).unwrap_err(), Error::ZeroSteps);
    }

    #[test]
    fn zero_limit_companion_stepper_preserves_constants() {
        // A* = shift with zero last row: constant windows are fixed points
        let (phi, _) = limiting_stepper(&consts(&[1.0, 0.0, 0.0]).limiting_matrix().unwrap(), 0.5).unwrap();
        assert!((&phi - &CMatrix::from_real_rows(&[[2.0, -1.0], [1.0, 0.0]])).norm_max() < 1e-12);
        let zero = CMatrix::zeros(2, 2);
        assert!(matches!(limiting_stepper(&zero, 0.5), Err(Error::SingularMap { .. })));
    }

    #[test]
    fn bundle_reproduces_samples() {
        let sys = CompanionSystem::new(vec![
            CoefficientModel::constant(0, re(1.0)),
            CoefficientModel::exp_perturbed(1, re(0.5), re(1.0), 1.0).unwrap(),
            CoefficientModel::exp_perturbed(2, re(1.0), re(-0.5), 0.7).unwrap(),
        ])
        .unwrap();
        let z0 = [re(1.0), re(-0.5)];
        let t = 0.2;
        let b = build_bundle(&sys, t, 50, 1e-11).unwrap();
        let w0 = initial_window(&sys, &z0, t, 1e-11).unwrap();
        let diff = run_difference(Stepper::Sequence(&b.steppers), &w0, 50, t).unwrap();
        let truth = sample_trajectory(&sys, &z0, t, 51, 1e-11).unwrap();
        for (a, c) in diff.values.iter().zip(&truth.values) {
            assert!((a - c).norm() < 1e-7);
        }
        assert!(b.stepper(1).is_some() && b.stepper(0).is_none());
    }
}
