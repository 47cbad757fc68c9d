//! Empirical contraction constants for the sampled system and the
//! boundedness and error bounds they imply.
//!
//! Constants are certified on a finite horizon only. The parametric error is
//! bounded factor by factor, `‖Φ_k − Φ*‖ ≤ K̃ρ̃ᵏ`, with `k` the absolute index.

use alloc::vec::Vec;

use crate::discretize::{run_difference, SampleSolution, Stepper};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, vec_norm, CMatrix, OperatorNorm};
use crate::math::{exp, linear_fit, ln};

/// `‖Mⁱ‖ ≤ K ρⁱ` on `0 ≤ i ≤ horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBound {
    pub k: f64,
    pub rho: f64,
    /// `ρ < 1`.
    pub contractive: bool,
}

pub fn fit_power_bound(m: &CMatrix, horizon: usize, norm: OperatorNorm) -> Result<PowerBound> {
    if horizon < 20 {
        return Err(Error::InvalidArgument("power bounds need a horizon of at least 20"));
    }
    let rho = (spectral_radius(m)? * (1.0 + 1e-6)).max(1e-12);
    let mut power = CMatrix::identity(m.rows());
    let mut k: f64 = 0.0;
    let mut scale = 1.0;
    for _ in 0..=horizon {
        k = k.max(power.norm(norm) / scale);
        power = power.matmul(m);
        scale *= rho;
    }
    Ok(PowerBound {
        k,
        rho,
        contractive: rho < 1.0,
    })
}

/// Geometric fit `‖Φ_k − Φ*‖ ≈ K̃ρ̃ᵏ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub k_tilde: f64,
    pub rho_tilde: f64,
    pub points: usize,
}

/// Default relative floor under which `‖Φ_k − Φ*‖` is integration noise.
pub const DEFAULT_STEPPER_FLOOR: f64 = 1e-8;

/// Fit over the steppers `Φ_k`, `k = first_index + i`; values at or below
/// `floor·(1 + ‖Φ*‖)` are excluded and an all-floor sequence yields `(0, 0)`.
pub fn fit_error_decay(steppers: &[CMatrix], first_index: usize, limiting: &CMatrix, norm: OperatorNorm, floor: f64) -> Result<DecayFit> {
    if steppers.len() < 20 {
        return Err(Error::InvalidArgument("decay fits need at least 20 steppers"));
    }
    let gate = floor * (1.0 + limiting.norm(norm));
    let points: Vec<(f64, f64)> = steppers
        .iter()
        .enumerate()
        .map(|(i, phi)| ((first_index + i) as f64, (phi - limiting).norm(norm)))
        .filter(|&(_, e)| e > gate)
        .collect();
    if points.is_empty() {
        return Ok(DecayFit {
            k_tilde: 0.0,
            rho_tilde: 0.0,
            points: 0,
        });
    }
    if points.len() < 2 {
        return Err(Error::DegenerateFit { points: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| ln(p.1)).collect();
    let (slope, _) = linear_fit(&xs, &ys).ok_or(Error::DegenerateFit { points: points.len() })?;
    let rho_tilde = exp(slope);
    if rho_tilde >= 1.0 {
        return Err(Error::NoDecay { base: rho_tilde });
    }
    let k_tilde = points.iter().map(|&(k, e)| e / rho_tilde.powi(k as i32)).fold(0.0, f64::max);
    Ok(DecayFit {
        k_tilde,
        rho_tilde,
        points: points.len(),
    })
}

/// `K = max ‖Φ_{k+i−1}⋯Φ_k‖ / ρⁱ` over every start `k` and length `i` in range.
pub fn fit_product_bound(steppers: &[CMatrix], rho: f64, norm: OperatorNorm) -> f64 {
    let mut k: f64 = 1.0;
    for start in 0..steppers.len() {
        let mut product = CMatrix::identity(steppers[start].rows());
        let mut scale = 1.0;
        for phi in &steppers[start..] {
            product = phi.matmul(&product);
            scale *= rho;
            k = k.max(product.norm(norm) / scale);
        }
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimates {
    pub k_star: f64,
    pub rho_star: f64,
    pub k_tilde: f64,
    pub rho_tilde: f64,
    pub k: f64,
    pub rho: f64,
    pub norm: OperatorNorm,
}

impl ContractionEstimates {
    /// Fit all three pairs; the time-varying products share `ρ = ρ*`.
    pub fn fit(steppers: &[CMatrix], first_index: usize, limiting: &CMatrix, horizon: usize, norm: OperatorNorm) -> Result<Self> {
        let star = fit_power_bound(limiting, horizon, norm)?;
        let decay = fit_error_decay(steppers, first_index, limiting, norm, DEFAULT_STEPPER_FLOOR)?;
        let span = &steppers[..steppers.len().min(horizon)];
        let k = fit_product_bound(span, star.rho, norm);
        Ok(ContractionEstimates {
            k_star: star.k,
            rho_star: star.rho,
            k_tilde: decay.k_tilde,
            rho_tilde: decay.rho_tilde,
            k,
            rho: star.rho,
            norm,
        })
    }
}

/// Outcome of a bound whose hypotheses may not hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundStatus {
    Checked { ok: bool },
    NotApplicable,
    HypothesesUnmet,
}

impl BoundStatus {
    /// `false` only for a checked bound that was violated.
    pub fn acceptable(self) -> bool {
        !matches!(self, BoundStatus::Checked { ok: false })
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundStatus::Checked { ok: true } => "pass",
            BoundStatus::Checked { ok: false } => "fail",
            BoundStatus::NotApplicable => "not_applicable",
            BoundStatus::HypothesesUnmet => "hypotheses_unmet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundedness {
    /// Whether `K*` sits below the admissible ceiling, evaluated with `N := j`.
    pub inequality_holds: bool,
    pub ceiling: f64,
    pub measured_sup: f64,
    pub status: BoundStatus,
}

/// Admissibility of `K*` for uniform boundedness from index `k`, and the
/// measured `sup_i ‖w_{k+i}‖`; `window_norms[k] = ‖w_k‖`.
pub fn check_boundedness_31i(est: &ContractionEstimates, k: usize, j: usize, window_norms: &[f64]) -> Boundedness {
    let measured_sup = window_norms.iter().skip(k).copied().fold(0.0, f64::max);
    if est.rho_star > 1.0 || est.rho_tilde >= 1.0 {
        return Boundedness {
            inequality_holds: false,
            ceiling: f64::NAN,
            measured_sup,
            status: BoundStatus::NotApplicable,
        };
    }
    let (rs, rt, kt) = (est.rho_star, est.rho_tilde, est.k_tilde);
    let n = j as i32;
    let growth = rs.powi(j as i32 - 1).max(1.0);
    let ceiling = (1.0 - rt) / (rs.powi(n) * (1.0 - rt + kt * rt.powi(k as i32) * (1.0 - rt.powi(n)) * growth));
    let inequality_holds = est.k_star > 0.0 && est.k_star <= ceiling;
    let status = if inequality_holds {
        BoundStatus::Checked { ok: measured_sup.is_finite() }
    } else {
        BoundStatus::HypothesesUnmet
    };
    Boundedness {
        inequality_holds,
        ceiling,
        measured_sup,
        status,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementBound {
    pub bound: f64,
    pub measured: f64,
    pub status: BoundStatus,
}

/// `| ‖w̃_{k+j}‖ − ‖w̃_k‖ | ≤ K K̃ρ̃ᵏ(1 − ρ̃ʲ)/(1 − ρ̃) · max_{0≤i≤j} ‖w*_{k+i}‖`
/// with `error_norms[k] = ‖w̃_k‖`.
pub fn error_bound_31ii(est: &ContractionEstimates, k: usize, j: usize, w_star_sup: f64, error_norms: &[f64]) -> IncrementBound {
    let measured = match (error_norms.get(k + j), error_norms.get(k)) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => f64::NAN,
    };
    if est.rho_star > 1.0 || est.rho >= 1.0 || est.rho_tilde >= 1.0 {
        return IncrementBound {
            bound: f64::NAN,
            measured,
            status: BoundStatus::HypothesesUnmet,
        };
    }
    let rt = est.rho_tilde;
    let bound = if est.k_tilde == 0.0 {
        0.0
    } else {
        est.k * est.k_tilde * rt.powi(k as i32) * (1.0 - rt.powi(j as i32)) / (1.0 - rt) * w_star_sup
    };
    let ok = measured.is_finite() && measured <= bound * (1.0 + 1e-6);
    IncrementBound {
        bound,
        measured,
        status: BoundStatus::Checked { ok },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBound {
    pub bound: f64,
    pub measured_sup: f64,
    /// Tail below `1e-8` or a decreasing envelope on the last half.
    pub tends_to_zero: bool,
    pub status: BoundStatus,
}

/// `max ‖w̃‖ ≤ (1 − K*(ρ* + K̃ρ̃ᵏ/(1 − ρ̃/ρ*)))⁻¹ · K*K̃ρ̃ᵏ/(1 − ρ̃/ρ*) · max ‖w*‖`
/// over the indices `≥ k`, where `error_norms[k] = ‖w̃_k‖`.
pub fn sup_error_bound_31iii(est: &ContractionEstimates, k: usize, w_star_sup: f64, error_norms: &[f64]) -> SupBound {
    let tail = if k < error_norms.len() { &error_norms[k..] } else { &[][..] };
    let measured_sup = tail.iter().copied().fold(0.0, f64::max);
    let tends_to_zero = tends_to_zero(tail);
    let (ks, rs, kt, rt) = (est.k_star, est.rho_star, est.k_tilde, est.rho_tilde);
    if kt == 0.0 {
        return SupBound {
            bound: 0.0,
            measured_sup,
            tends_to_zero,
            status: BoundStatus::Checked {
                ok: measured_sup <= 0.0,
            },
        };
    }
    let chain = rt < rs && rs < 1.0 && ks * rs < 1.0;
    let shrink = 1.0 - rt / rs;
    let forcing = kt * rt.powi(k as i32) / shrink;
    let prefactor = 1.0 - ks * (rs + forcing);
    if !chain || !(prefactor > 0.0) {
        return SupBound {
            bound: f64::NAN,
            measured_sup,
            tends_to_zero,
            status: BoundStatus::HypothesesUnmet,
        };
    }
    let bound = ks * forcing * w_star_sup / prefactor;
    SupBound {
        bound,
        measured_sup,
        tends_to_zero,
        status: BoundStatus::Checked {
            ok: measured_sup <= bound * (1.0 + 1e-6) && tends_to_zero,
        },
    }
}

fn tends_to_zero(tail: &[f64]) -> bool {
    let Some(last) = tail.last() else { return true };
    if *last < 1e-8 {
        return true;
    }
    // running maxima from the right must shrink across the second half
    let half = tail.len() / 2;
    let first = tail[half..].iter().copied().fold(0.0, f64::max);
    let later = tail[tail.len() - tail.len() / 4..].iter().copied().fold(0.0, f64::max);
    later < first
}

/// `‖w_k‖` for every `k`, zero below `n−1` where no window exists.
pub fn window_norms(x: &SampleSolution, norm: OperatorNorm) -> Vec<f64> {
    (0..x.len()).map(|k| x.window(k).map_or(0.0, |w| vec_norm(&w, norm))).collect()
}

/// `‖w_k − w*_k‖` for two solutions on the same index set.
pub fn error_norms(x: &SampleSolution, x_star: &SampleSolution, norm: OperatorNorm) -> Vec<f64> {
    (0..x.len().min(x_star.len()))
        .map(|k| match (x.window(k), x_star.window(k)) {
            (Some(a), Some(b)) => {
                let d: Vec<_> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
                vec_norm(&d, norm)
            }
            _ => 0.0,
        })
        .collect()
}

/// Compare `w` on `[k, k+j]` with the limiting solution that agrees with it at
/// index `k`. Returns `error_norms` indexed absolutely (so `[k]` is zero) and
/// `max_{0≤i≤j} ‖w*_{k+i}‖`.
pub fn anchored_errors(x: &SampleSolution, limiting: &CMatrix, k: usize, j: usize, norm: OperatorNorm) -> Result<(Vec<f64>, f64)> {
    let n = x.order;
    if k + j >= x.len() || k + 1 < n {
        return Err(Error::InvalidArgument("anchored comparison outside the solution"));
    }
    let start = x.window(k).expect("index checked");
    let star = run_difference(Stepper::Constant(limiting), &start, j, x.period)?;
    let mut errors = alloc::vec![0.0; k + j + 1];
    let mut sup: f64 = 0.0;
    for i in 0..=j {
        let ws = star.window(n - 1 + i).expect("j steps run");
        let w = x.window(k + i).expect("index checked");
        sup = sup.max(vec_norm(&ws, norm));
        let d: Vec<_> = w.iter().zip(&ws).map(|(p, q)| p - q).collect();
        errors[k + i] = vec_norm(&d, norm);
    }
    Ok((errors, sup))
}
