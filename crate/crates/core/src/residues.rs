//! Residue calculus for the sampled solution and its limiting expansion.
//!
//! With `Δ(z) = zⁿ − Σⱼ φ*ⱼ zⁿ⁻ʲ` and `X(z) = Σ_k x_k z⁻ᵏ`, the sampled
//! solution satisfies `Δ(z)X(z) = q̂(z) + ĉ(z)` where `q̂` collects the initial
//! samples and `ĉ(z) = Σ_{i≥0} c(n+i) z⁻ⁱ` collects the parametric forcing
//! `c(k) = x_k − Σⱼ φ*ⱼ x_{k−j}`. Hence `x_k = Σ Res(zᵏ⁻¹ Δ⁻¹ f)` with
//! `f = q̂ + ĉ`, summed over every singularity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::discretize::SampleSolution;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::math::{c64, cos, cpow_signed, cpowi, exp, linear_fit, ln, sin, Complex64};
use crate::poly::{Poly, Series};
use crate::propagate::matrix_exponential;
use crate::spectrum::{lambda_set, LimitingSpectrum, Root};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Absolute floor below which errors are treated as rounding noise.
pub const ERROR_FLOOR: f64 = 1e-13;

/// A function analytic near the points where its Taylor jets are requested.
pub trait Analytic {
    fn eval(&self, z: Complex64) -> Complex64;
    /// Taylor coefficients of orders `0..len` about `center`.
    fn taylor(&self, center: Complex64, len: usize) -> Series;
}

impl Analytic for Poly {
    fn eval(&self, z: Complex64) -> Complex64 {
        Poly::eval(self, z)
    }

    fn taylor(&self, center: Complex64, len: usize) -> Series {
        if len == 0 {
            return Series::zeros(0);
        }
        self.taylor_at(center, len - 1)
    }
}

/// `z^e` for a fixed integer exponent `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Power(pub i64);

fn binomial_signed(top: i64, j: usize) -> f64 {
    // C(top, j) = top (top−1) … (top−j+1) / j!, valid for negative top
    let mut acc = 1.0;
    for i in 0..j {
        acc *= (top - i as i64) as f64 / (i + 1) as f64;
    }
    acc
}

impl Analytic for Power {
    fn eval(&self, z: Complex64) -> Complex64 {
        cpow_signed(z, self.0)
    }

    fn taylor(&self, center: Complex64, len: usize) -> Series {
        Series::new(
            (0..len)
                .map(|j| {
                    let c = binomial_signed(self.0, j);
                    if c == 0.0 {
                        ZERO
                    } else {
                        cpow_signed(center, self.0 - j as i64) * c
                    }
                })
                .collect(),
        )
    }
}

/// Pointwise product of two analytic functions.
pub struct Product<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: Analytic + ?Sized, B: Analytic + ?Sized> Analytic for Product<'_, A, B> {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.0.eval(z) * self.1.eval(z)
    }

    fn taylor(&self, center: Complex64, len: usize) -> Series {
        self.0.taylor(center, len).mul(&self.1.taylor(center, len))
    }
}

/// Truncated `ĉ(z) = Σ_{i=0}^{K} cᵢ z⁻ⁱ` with a certified geometric tail.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSeries {
    /// `cᵢ = c(n+i)`.
    pub coeffs: Vec<Complex64>,
    /// Fitted decay base `ν̂` of `|cᵢ|`.
    pub nu_hat: f64,
    /// Prefactor with `|cᵢ| ≤ C_tail·ν̂ⁱ` on the fitted window.
    pub c_tail: f64,
}

impl CorrectionSeries {
    pub fn zero() -> Self {
        CorrectionSeries {
            coeffs: Vec::new(),
            nu_hat: 0.0,
            c_tail: 0.0,
        }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Bound on the omitted terms `i > K` at modulus `r > ν̂`.
    pub fn tail_bound(&self, r: f64) -> f64 {
        if self.c_tail == 0.0 || self.nu_hat == 0.0 {
            return 0.0;
        }
        let q = self.nu_hat / r;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        self.c_tail * q.powi(self.coeffs.len() as i32) / (1.0 - q)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }
}

impl Analytic for CorrectionSeries {
    fn eval(&self, z: Complex64) -> Complex64 {
        let w = Complex64::new(1.0, 0.0) / z;
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * w + c)
    }

    fn taylor(&self, center: Complex64, len: usize) -> Series {
        let mut out = vec![ZERO; len];
        let inv = Complex64::new(1.0, 0.0) / center;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            if i == 0 {
                if len > 0 {
                    out[0] += c;
                }
                continue;
            }
            // d^j/dz^j z^{−i} / j! = (−1)^j C(i+j−1, j) z^{−i−j}
            let mut power = cpowi(inv, i as u64);
            let mut binom = 1.0;
            for (j, slot) in out.iter_mut().enumerate() {
                if j > 0 {
                    binom *= (i + j - 1) as f64 / j as f64;
                    power *= inv;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *slot += c * power * (sign * binom);
            }
        }
        Series::new(out)
    }
}

/// `f = q̂ + ĉ` over the limiting denominator `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeromorphicData {
    pub denominator: Poly,
    pub numerator: Poly,
    pub correction: CorrectionSeries,
}

impl MeromorphicData {
    pub fn f(&self, z: Complex64) -> Complex64 {
        Analytic::eval(&self.numerator, z) + self.correction.eval(z)
    }

    /// `z^{k−1} f(z) / Δ(z)`.
    pub fn integrand(&self, k: i64, z: Complex64) -> Complex64 {
        cpow_signed(z, k - 1) * self.f(z) / self.denominator.eval(z)
    }
}

impl Analytic for MeromorphicData {
    /// Evaluates the numerator `f` only; `Δ` enters through the residue.
    fn eval(&self, z: Complex64) -> Complex64 {
        self.f(z)
    }

    fn taylor(&self, center: Complex64, len: usize) -> Series {
        Analytic::taylor(&self.numerator, center, len).add(&self.correction.taylor(center, len))
    }
}

/// `Δ(z) = zⁿ − Σⱼ φ*ⱼ zⁿ⁻ʲ` from the limiting row.
pub fn limiting_denominator(limiting_row: &[Complex64]) -> Poly {
    let n = limiting_row.len();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    for (j, phi) in limiting_row.iter().enumerate() {
        coeffs[n - (j + 1)] -= *phi;
    }
    Poly::new(coeffs)
}

/// q̂ from the initial samples `x_0, …, x_{n−1}` and `(φ*_1, …, φ*_n)`.
pub fn build_qhat(initial: &[Complex64], limiting_row: &[Complex64]) -> Result<Poly> {
    let n = limiting_row.len();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial.len(),
        });
    }
    let mut coeffs = vec![ZERO; n + 1];
    for (l, &x) in initial.iter().enumerate() {
        coeffs[n - l] += x;
    }
    for j in 1..=n {
        for l in 0..n - j {
            coeffs[n - j - l] -= limiting_row[j - 1] * initial[l];
        }
    }
    Ok(Poly::new(coeffs))
}

/// Relative size below which a forcing coefficient is indistinguishable from
/// integration noise when the integrator tolerance is unknown.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-8;

/// Noise floor for samples integrated at `integrator_tol`: the global error
/// is absolute against the running peak and stays within about ten tolerances.
///
/// Coarser floors drop coefficients whose `μ⁻ᵏ`-weighted size still matters;
/// the dropped tail then shows up as a spurious `μᵏ` term in `x − x*`.
pub fn noise_floor_for(integrator_tol: f64) -> f64 {
    10.0 * integrator_tol
}

/// `c(k) = x_k − Σⱼ φ*ⱼ x_{k−j}` for `k = n..=n+K`, floored against the running
/// peak of `|x|`, with the geometric tail fitted on the last quarter of the
/// significant coefficients.
pub fn build_chat_from_samples(samples: &[Complex64], limiting_row: &[Complex64], truncation: usize, noise_floor: f64) -> Result<CorrectionSeries> {
    let n = limiting_row.len();
    if samples.len() < n + truncation + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + truncation + 1,
            found: samples.len(),
        });
    }
    // integration error is absolute against the largest state seen so far
    let weight = 1.0 + limiting_row.iter().map(|p| p.norm()).sum::<f64>();
    let mut peak = samples[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut coeffs = Vec::with_capacity(truncation + 1);
    for k in n..=n + truncation {
        peak = peak.max(samples[k].norm());
        let mut c = samples[k];
        for (j, phi) in limiting_row.iter().enumerate() {
            c -= phi * samples[k - j - 1];
        }
        coeffs.push(if c.norm() <= noise_floor * weight * peak { ZERO } else { c });
    }
    let significant: Vec<usize> = (0..coeffs.len()).filter(|&i| coeffs[i] != ZERO).collect();
    let (nu_hat, c_tail) = match significant.len() {
        0 => (0.0, 0.0),
        1 => (0.0, coeffs[significant[0]].norm()),
        len => {
            let window = &significant[len - (len / 4).max(2)..];
            let xs: Vec<f64> = window.iter().map(|&i| i as f64).collect();
            let ys: Vec<f64> = window.iter().map(|&i| ln(coeffs[i].norm())).collect();
            let (slope, _) = linear_fit(&xs, &ys).ok_or(Error::DegenerateFit { points: window.len() })?;
            let nu = exp(slope);
            let c = window.iter().map(|&i| coeffs[i].norm() / nu.powi(i as i32)).fold(0.0, f64::max);
            (nu, c)
        }
    };
    Ok(CorrectionSeries { coeffs, nu_hat, c_tail })
}

/// [`build_chat_from_samples`] plus the decay gate `ν̂ < μ`.
pub fn build_chat(samples: &[Complex64], limiting_row: &[Complex64], truncation: usize, mu: f64, noise_floor: f64) -> Result<CorrectionSeries> {
    let chat = build_chat_from_samples(samples, limiting_row, truncation, noise_floor)?;
    if chat.nu_hat >= mu && !chat.is_zero() {
        return Err(Error::NoDecay { base: chat.nu_hat });
    }
    Ok(chat)
}

/// Assemble `Δ`, `q̂` and `ĉ` from sampled data.
pub fn meromorphic_data(samples: &[Complex64], limiting_row: &[Complex64], truncation: usize, mu: f64, noise_floor: f64) -> Result<MeromorphicData> {
    let n = limiting_row.len();
    if samples.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: samples.len(),
        });
    }
    let numerator = build_qhat(&samples[..n], limiting_row)?;
    let truncation = truncation.min(samples.len().saturating_sub(n + 1));
    let correction = if samples.len() > n {
        build_chat(samples, limiting_row, truncation, mu, noise_floor)?
    } else {
        CorrectionSeries::zero()
    };
    Ok(MeromorphicData {
        denominator: limiting_denominator(limiting_row),
        numerator,
        correction,
    })
}

const POLE_TOL: f64 = 1e-7;
const DIVIDED_TOL: f64 = 1e-12;

/// `Res(N/D; λ)` for a pole of multiplicity `m`, via Taylor jets:
/// with `D = (z−λ)ᵐ q`, the residue is the order-`m−1` coefficient of `N/q`.
pub fn residue_closed_form<N: Analytic + ?Sized>(numer: &N, denominator: &Poly, pole: Complex64, m: usize) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::InvalidArgument("pole multiplicity must be positive"));
    }
    let d = denominator.taylor_at(pole, 2 * m);
    let scale: f64 = denominator
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm() * (1.0 + pole.norm()).powi(i as i32))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let residual = (0..m).map(|j| d.coeff(j).norm()).fold(0.0, f64::max) / scale;
    if residual > POLE_TOL {
        return Err(Error::PoleMismatch { residual });
    }
    let q = d.shift_down(m).truncate(m);
    if q.coeff(0).norm() <= DIVIDED_TOL * scale {
        return Err(Error::DividedPole);
    }
    let ratio = numer.taylor(pole, m).div(&q)?;
    Ok(ratio.coeff(m - 1))
}

/// Trapezoidal `∮ g dz` over `|z − center| = radius` with `nodes` points.
pub fn contour_integral<G: Fn(Complex64) -> Complex64 + ?Sized>(g: &G, center: Complex64, radius: f64, nodes: usize) -> Complex64 {
    let mut acc = ZERO;
    for j in 0..nodes {
        let theta = 2.0 * PI * j as f64 / nodes as f64;
        let offset = c64(radius * cos(theta), radius * sin(theta));
        acc += g(center + offset) * offset;
    }
    // dz = i (z − c) dθ
    acc * Complex64::new(0.0, 2.0 * PI / nodes as f64)
}

pub const NODE_BUDGET_TOL: f64 = 1e-9;

/// `(1/2πi)∮ g dz`, refined twice by node doubling; the finest value is returned.
pub fn residue_contour<G: Fn(Complex64) -> Complex64 + ?Sized>(g: &G, center: Complex64, radius: f64, nodes: usize) -> Result<Complex64> {
    if nodes < 64 {
        return Err(Error::InvalidArgument("contour quadrature needs at least 64 nodes"));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("contour radius must be positive"));
    }
    let scale = Complex64::new(0.0, 2.0 * PI);
    let coarse = contour_integral(g, center, radius, nodes) / scale;
    let fine = contour_integral(g, center, radius, 4 * nodes) / scale;
    let change = (fine - coarse).norm();
    if change > NODE_BUDGET_TOL * fine.norm().max(1.0) {
        return Err(Error::NodeBudget { change });
    }
    Ok(fine)
}

/// `Res(z^{k−1} Δ⁻¹ f; λ)`, a characteristic solution `p(k)λᵏ` with `deg p < m`.
pub fn characteristic_solution(data: &MeromorphicData, pole: &Root, k: i64) -> Result<Complex64> {
    let kernel = Power(k - 1);
    residue_closed_form(&Product(&kernel, data), &data.denominator, pole.value, pole.multiplicity)
}

/// Sum of characteristic solutions over every root of `Δ`.
pub fn full_limiting_solution(spectrum: &LimitingSpectrum, data: &MeromorphicData, k: i64) -> Result<Complex64> {
    spectrum.roots.iter().try_fold(ZERO, |acc, r| Ok(acc + characteristic_solution(data, r, k)?))
}

/// Sum of characteristic solutions over the dominant ring `Λ(μ)`.
pub fn dominant_limiting_solution(spectrum: &LimitingSpectrum, data: &MeromorphicData, k: i64, ring_tol: f64) -> Result<Complex64> {
    lambda_set(spectrum, ring_tol)?
        .iter()
        .try_fold(ZERO, |acc, r| Ok(acc + characteristic_solution(data, r, k)?))
}

/// `x*_k` for `k = 0..count` from [`dominant_limiting_solution`].
pub fn dominant_sequence(spectrum: &LimitingSpectrum, data: &MeromorphicData, count: usize, ring_tol: f64) -> Result<SampleSolution> {
    let values = (0..count)
        .map(|k| dominant_limiting_solution(spectrum, data, k as i64, ring_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSolution {
        period: spectrum.period,
        order: spectrum.order(),
        values,
    })
}

/// `ε = min(μ − ν̂, μ − next ring)/4`; the next ring defaults to the origin.
pub fn choose_epsilon(spectrum: &LimitingSpectrum, nu_hat: f64, ring_tol: f64) -> Result<f64> {
    let mu = spectrum.mu;
    if nu_hat >= mu {
        return Err(Error::NoGap);
    }
    let gap = mu - spectrum.next_ring(ring_tol).unwrap_or(0.0);
    Ok((mu - nu_hat).min(gap) / 4.0)
}

/// Fitted decay of `|x_k − x*_k|` against the `(μ − ε)^k` rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub period: f64,
    pub mu: f64,
    pub epsilon: f64,
    /// `(k, |x_k − x*_k|)`, relative to `|x*_k|` in relative mode.
    pub errors: Vec<(usize, f64)>,
    pub slope: Option<f64>,
    pub constant: Option<f64>,
    pub threshold: f64,
    pub points_used: usize,
    pub relative: bool,
    pub vacuous: bool,
    pub pass: bool,
}

impl ExpansionReport {
    pub fn fitted_rate(&self) -> Option<f64> {
        self.slope.map(exp)
    }
}

pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares slope of `ln|x_k − x*_k|` over `window` against `ln(μ − ε) + 0.05`.
pub fn expansion_check(x: &SampleSolution, x_star: &SampleSolution, mu: f64, epsilon: f64, window: (usize, usize), relative: bool) -> Result<ExpansionReport> {
    if x.len() != x_star.len() || x.len() < 30 {
        return Err(Error::InvalidArgument("expansion check needs matching sequences of length >= 30"));
    }
    let (lo, hi) = (window.0, window.1.min(x.len() - 1));
    let errors: Vec<(usize, f64)> = (lo..=hi)
        .map(|k| {
            let e = (x.values[k] - x_star.values[k]).norm();
            let e = if relative { e / x_star.values[k].norm().max(f64::MIN_POSITIVE) } else { e };
            (k, e)
        })
        .collect();
    let threshold = ln(mu - epsilon) + 0.05;
    fit_errors(x.period, mu, epsilon, errors, threshold, relative)
}

fn fit_errors(period: f64, mu: f64, epsilon: f64, errors: Vec<(usize, f64)>, threshold: f64, relative: bool) -> Result<ExpansionReport> {
    let usable: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(_, e)| *e > ERROR_FLOOR && e.is_finite())
        .map(|&(k, e)| (k as f64, ln(e)))
        .collect();
    if usable.is_empty() {
        return Ok(ExpansionReport {
            period,
            mu,
            epsilon,
            errors,
            slope: None,
            constant: None,
            threshold,
            points_used: 0,
            relative,
            vacuous: true,
            pass: true,
        });
    }
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit { points: usable.len() });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1).collect();
    let (slope, intercept) = linear_fit(&xs, &ys).ok_or(Error::DegenerateFit { points: usable.len() })?;
    Ok(ExpansionReport {
        period,
        mu,
        epsilon,
        errors,
        slope: Some(slope),
        constant: Some(exp(intercept)),
        threshold,
        points_used: usable.len(),
        relative,
        vacuous: false,
        pass: slope <= threshold,
    })
}

/// Continuous limiting solution `x*(t)` through the dominant samples:
/// `z*(0) = M*⁻¹ w*_{n−1}`, then `x*(t) = e₁ᵀ e^{A*t} z*(0)`.
pub fn limiting_initial_state(limiting_map: &CMatrix, dominant: &SampleSolution) -> Result<Vec<Complex64>> {
    let n = limiting_map.rows();
    let w = dominant.window(n - 1).ok_or(Error::InvalidArgument("dominant sequence shorter than the order"))?;
    Ok(limiting_map.lu()?.solve_vec(&w))
}

/// `x*(kT + τ)` for `k = 0..count`.
pub fn limiting_offsets(limit: &CMatrix, z_star: &[Complex64], period: f64, tau: f64, count: usize) -> Result<Vec<Complex64>> {
    let step = matrix_exponential(limit, period)?;
    let mut z = matrix_exponential(limit, tau)?.mul_vec(z_star);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(z[0]);
        z = step.mul_vec(&z);
    }
    Ok(out)
}

/// Per-offset decay of the intersample error.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetResult {
    pub tau: f64,
    /// `sup_k |x(kT+τ) − x*(kT+τ)| / ((μ−ε)^k + floor)` over the window.
    pub max_ratio: f64,
    pub slope: Option<f64>,
    pub pass: bool,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersampleReport {
    pub offsets: Vec<OffsetResult>,
    /// `K̄`, the largest normalized error across offsets.
    pub k_bar: f64,
    pub pass: bool,
}

/// Normalize the error at every offset against `(μ − ε)^k`; each offset must
/// also pass the expansion slope test.
pub fn intersample_check(
    errors_by_offset: &[(f64, Vec<(usize, f64)>)],
    period: f64,
    mu: f64,
    epsilon: f64,
    relative: bool,
) -> Result<IntersampleReport> {
    let base = mu - epsilon;
    let threshold = ln(base) + 0.05;
    let mut offsets = Vec::with_capacity(errors_by_offset.len());
    let mut k_bar: f64 = 0.0;
    for (tau, errors) in errors_by_offset {
        let max_ratio = errors
            .iter()
            .map(|&(k, e)| e / (base.powi(k as i32) + ERROR_FLOOR))
            .fold(0.0, f64::max);
        let report = fit_errors(period, mu, epsilon, errors.clone(), threshold, relative)?;
        k_bar = k_bar.max(max_ratio);
        offsets.push(OffsetResult {
            tau: *tau,
            max_ratio,
            slope: report.slope,
            pass: report.pass && max_ratio.is_finite(),
            vacuous: report.vacuous,
        });
    }
    let pass = offsets.iter().all(|o| o.pass) && k_bar.is_finite();
    Ok(IntersampleReport { offsets, k_bar, pass })
}

/// Measured `|∮_{γ_c} z^{k−1}Δ⁻¹f dz|` against `2πK(μ−ε)^k`, with `K` the
/// maximum of `|Δ⁻¹f|` over four times as many nodes on `γ_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderCheck {
    pub k: i64,
    pub measured: f64,
    pub bound: f64,
    pub k_const: f64,
    pub pass: bool,
}

pub fn remainder_bound(data: &MeromorphicData, radius: f64, k: i64, nodes: usize) -> RemainderCheck {
    let measured = contour_integral(&|z: Complex64| data.integrand(k, z), ZERO, radius, nodes).norm();
    let dense = 4 * nodes;
    let k_const = (0..dense)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / dense as f64;
            let z = c64(radius * cos(theta), radius * sin(theta));
            (data.f(z) / data.denominator.eval(z)).norm()
        })
        .fold(0.0, f64::max);
    let bound = 2.0 * PI * k_const * radius.powi(k as i32);
    RemainderCheck {
        k,
        measured,
        bound,
        k_const,
        pass: measured <= bound * (1.0 + 1e-6),
    }
}

/// `∮_{γ_b} − ∮_{γ_c}` of `z^{k−1}Δ⁻¹f` minus `2πi` times the dominant residues.
pub fn cycle_identity_residual(spectrum: &LimitingSpectrum, data: &MeromorphicData, epsilon: f64, k: i64, nodes: usize, ring_tol: f64) -> Result<f64> {
    let g = |z: Complex64| data.integrand(k, z);
    let outer = contour_integral(&g, ZERO, spectrum.mu + epsilon, nodes);
    let inner = contour_integral(&g, ZERO, spectrum.mu - epsilon, nodes);
    let residues = dominant_limiting_solution(spectrum, data, k, ring_tol)?;
    Ok((outer - inner - residues * Complex64::new(0.0, 2.0 * PI)).norm())
}
