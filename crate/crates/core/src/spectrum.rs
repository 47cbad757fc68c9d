//! Characteristic roots of the limiting difference system and the
//! stability trichotomy they decide.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};
use crate::math::{exp, ln, linear_fit, powf, Complex64};
use crate::poly::Poly;
use crate::propagate::matrix_exponential;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;
pub const DEFAULT_STRICT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Root {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }
}

/// Monic `det(zI − M)` expanded from the eigenvalues of `M`.
pub fn characteristic_polynomial(m: &CMatrix) -> Result<Poly> {
    let ev = eigenvalues(m)?;
    let roots: Vec<(Complex64, usize)> = ev.into_iter().map(|z| (z, 1)).collect();
    Ok(Poly::from_roots(&roots))
}

/// Roots of `poly` merged into clusters closer than `cluster_tol·(1+|r|)`.
pub fn roots_with_multiplicity(poly: &Poly, cluster_tol: f64) -> Result<Vec<Root>> {
    let degree = poly.degree().unwrap_or(0);
    if degree == 0 {
        return Err(Error::InvalidArgument("root extraction needs degree >= 1"));
    }
    let zeros = poly.coeffs().iter().take_while(|c| **c == Complex64::new(0.0, 0.0)).count();
    let mut roots: Vec<Root> = Vec::new();
    if zeros > 0 {
        roots.push(Root {
            value: Complex64::new(0.0, 0.0),
            multiplicity: zeros,
        });
    }
    if zeros == degree {
        return Ok(roots);
    }
    let deflated = Poly::new(poly.coeffs()[zeros..].to_vec());
    let mut ev = eigenvalues(&deflated.companion()?)?;
    ev.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.arg().partial_cmp(&b.arg()).unwrap_or(core::cmp::Ordering::Equal))
    });
    // clusters as (sum, count)
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for z in ev {
        let hit = clusters.iter_mut().find(|(sum, count)| {
            let centroid = *sum / *count as f64;
            (z - centroid).norm() <= cluster_tol * (1.0 + z.norm())
        });
        match hit {
            Some((sum, count)) => {
                *sum += z;
                *count += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    let mut nonzero: Vec<Root> = clusters
        .into_iter()
        .map(|(sum, count)| Root {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect();
    roots.append(&mut nonzero);
    Ok(roots)
}

fn tail_start(len: usize, tail_fraction: f64) -> Result<usize> {
    if len < 20 {
        return Err(Error::InvalidArgument("at least 20 samples are required"));
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument("tail fraction must lie in (0, 1)"));
    }
    let count = ((len as f64) * tail_fraction).ceil() as usize;
    Ok(len - count.clamp(1, len - 1))
}

/// Tail maximum of `|x_k|^{1/k}`, a finite-sample stand-in for the limsup.
pub fn mu_estimate(samples: &[Complex64], tail_fraction: f64) -> Result<f64> {
    let start = tail_start(samples.len(), tail_fraction)?.max(1);
    samples[start..]
        .iter()
        .enumerate()
        .filter(|(_, x)| x.norm() > 0.0)
        .map(|(i, x)| powf(x.norm(), 1.0 / (start + i) as f64))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(Error::AllZeroTail)
}

/// Growth rate from the upper envelope of `ln|x_k|` over the tail.
///
/// Unlike [`mu_estimate`] this is invariant under rescaling the solution: the
/// slope of the upper convex hull does not see the amplitude.
pub fn mu_envelope_estimate(samples: &[Complex64], tail_fraction: f64) -> Result<f64> {
    let start = tail_start(samples.len(), tail_fraction)?;
    let points: Vec<(f64, f64)> = samples[start..]
        .iter()
        .enumerate()
        .filter(|(_, x)| x.norm() > 0.0)
        .map(|(i, x)| ((start + i) as f64, ln(x.norm())))
        .collect();
    if points.is_empty() {
        return Err(Error::AllZeroTail);
    }
    if points.len() < 2 {
        return Err(Error::DegenerateFit { points: points.len() });
    }
    // monotone-chain upper hull
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // the tail endpoints are always hull vertices even when they sit in a trough
    let core = if hull.len() > 3 { &hull[1..hull.len() - 1] } else { &hull[..] };
    let xs: Vec<f64> = core.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = core.iter().map(|p| p.1).collect();
    let (slope, _) = linear_fit(&xs, &ys).ok_or(Error::DegenerateFit { points: core.len() })?;
    Ok(exp(slope))
}

/// Relative residual below which a recurrence of lower order is accepted.
pub const RECURRENCE_FIT_TOL: f64 = 1e-6;

/// Dominant root modulus of the lowest-order recurrence (at most `max_order`)
/// that reproduces the tail, `x_{k+m} = −Σ aᵢ x_{k+m−i}`.
///
/// Each regression row is normalised by its largest entry, so exponential
/// growth or decay does not weight the fit. Exact for samples of a constant
/// system; free of the amplitude bias of [`mu_estimate`] and of the
/// subdominant-mode bias of [`mu_envelope_estimate`].
pub fn mu_recurrence_estimate(samples: &[Complex64], tail_fraction: f64, max_order: usize) -> Result<f64> {
    let start = tail_start(samples.len(), tail_fraction)?;
    let tail = &samples[start..];
    if tail.iter().all(|x| x.norm() == 0.0) {
        return Err(Error::AllZeroTail);
    }
    let mut fallback = None;
    for m in 1..=max_order.max(1) {
        if tail.len() < 2 * m + 1 {
            break;
        }
        let Some((coeffs, residual)) = fit_recurrence(tail, m) else { continue };
        let modulus = Poly::from_monic_descending(&coeffs).companion().and_then(|c| crate::linalg::spectral_radius(&c));
        let Ok(modulus) = modulus else { continue };
        if residual <= RECURRENCE_FIT_TOL {
            return Ok(modulus);
        }
        fallback = Some(modulus);
    }
    fallback.ok_or(Error::DegenerateFit { points: tail.len() })
}

/// Least-squares `a` (descending, monic implied) and the worst normalised row residual.
fn fit_recurrence(x: &[Complex64], m: usize) -> Option<(Vec<Complex64>, f64)> {
    let rows: Vec<(Vec<Complex64>, Complex64)> = (0..x.len() - m)
        .filter_map(|k| {
            let scale = x[k..=k + m].iter().map(|v| v.norm()).fold(0.0, f64::max);
            (scale > 0.0).then(|| {
                let lhs = (1..=m).map(|i| x[k + m - i] / scale).collect();
                (lhs, -x[k + m] / scale)
            })
        })
        .collect();
    if rows.len() < m {
        return None;
    }
    // normal equations; m ≤ n is small and rows are normalised
    let mut gram = CMatrix::zeros(m, m);
    let mut rhs = CMatrix::zeros(m, 1);
    for (lhs, b) in &rows {
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] += lhs[i].conj() * lhs[j];
            }
            rhs[(i, 0)] += lhs[i].conj() * b;
        }
    }
    let a = gram.solve(&rhs).ok()?.col(0);
    if a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let residual = rows
        .iter()
        .map(|(lhs, b)| (lhs.iter().zip(&a).map(|(l, c)| l * c).sum::<Complex64>() - b).norm())
        .fold(0.0, f64::max);
    Some((a, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    AsymptoticallyStable,
    LyapunovStable,
    Unstable,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "asymptotically_stable",
            Stability::LyapunovStable => "lyapunov_stable",
            Stability::Unstable => "unstable",
        }
    }
}

pub fn classify_stability(mu: f64, strict_tol: f64) -> Stability {
    if mu < 1.0 - strict_tol {
        Stability::AsymptoticallyStable
    } else if mu > 1.0 + strict_tol {
        Stability::Unstable
    } else {
        Stability::LyapunovStable
    }
}

/// Spectrum of `e^{A*T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingSpectrum {
    pub period: f64,
    pub char_poly: Poly,
    pub roots: Vec<Root>,
    pub mu: f64,
}

impl LimitingSpectrum {
    pub fn new(limit: &CMatrix, period: f64, cluster_tol: f64) -> Result<Self> {
        let fundamental = matrix_exponential(limit, period)?;
        let char_poly = characteristic_polynomial(&fundamental)?;
        let roots = roots_with_multiplicity(&char_poly, cluster_tol)?;
        let mu = roots.iter().map(Root::modulus).fold(0.0, f64::max);
        if !(mu > 0.0) {
            return Err(Error::InvalidSystem("fundamental matrix has a zero spectrum"));
        }
        Ok(LimitingSpectrum {
            period,
            char_poly,
            roots,
            mu,
        })
    }

    pub fn order(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Largest root modulus strictly inside the dominant ring, if any.
    pub fn next_ring(&self, ring_tol: f64) -> Option<f64> {
        self.roots
            .iter()
            .map(Root::modulus)
            .filter(|m| self.mu - m > ring_tol * (1.0 + self.mu))
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
    }

    pub fn stability(&self, strict_tol: f64) -> Stability {
        classify_stability(self.mu, strict_tol)
    }
}

/// Roots on the dominant circle `|z| = μ`.
pub fn lambda_set(spectrum: &LimitingSpectrum, ring_tol: f64) -> Result<Vec<Root>> {
    let ring: Vec<Root> = spectrum
        .roots
        .iter()
        .filter(|r| (r.modulus() - spectrum.mu).abs() <= ring_tol * (1.0 + spectrum.mu))
        .copied()
        .collect();
    if ring.is_empty() {
        Err(Error::EmptyRing)
    } else {
        Ok(ring)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{c64, cos, re, sin};
    use alloc::vec;
    use alloc::vec::Vec;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn charpoly_examples() {
        let p = characteristic_polynomial(&CMatrix::diagonal(&[re(0.5), re(0.25)])).unwrap();
        assert!(close(p.coeff(0), re(0.125), 1e-15) && close(p.coeff(1), re(-0.75), 1e-15));
        let nil = characteristic_polynomial(&CMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]])).unwrap();
        assert!(nil.coeff(0).norm() < 1e-15 && nil.coeff(1).norm() < 1e-15 && nil.coeff(2) == re(1.0));
        let a = CMatrix::from_real_rows(&[[0.0, 1.0], [-2.0, -3.0]]);
        let p = characteristic_polynomial(&matrix_exponential(&a, 0.1).unwrap()).unwrap();
        // (z − e^{−0.1})(z − e^{−0.2})
        assert!(close(p.coeff(1), re(-(exp(-0.1) + exp(-0.2))), 1e-12));
        assert!(close(p.coeff(0), re(exp(-0.3)), 1e-12));
    }

    #[test]
    fn clustering() {
        let p = Poly::from_roots(&[(re(0.5), 1), (re(0.25), 1)]);
        let r = roots_with_multiplicity(&p, 1e-6).unwrap();
        assert_eq!(r.len(), 2);
        assert!(close(r[0].value, re(0.5), 1e-12) && r[0].multiplicity == 1);
        let d = Poly::from_roots(&[(re(0.5), 2)]);
        let r = roots_with_multiplicity(&d, 1e-6).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!(close(r[0].value, re(0.5), 1e-12));
        let cube = Poly::monomial(re(1.0), 3);
        assert_eq!(roots_with_multiplicity(&cube, 1e-6).unwrap(), vec![Root { value: re(0.0), multiplicity: 3 }]);
    }

    #[test]
    fn mu_examples() {
        let geo: Vec<Complex64> = (0..200).map(|k| re(powf(0.5, k as f64))).collect();
        assert!((mu_estimate(&geo, 0.25).unwrap() - 0.5).abs() < 1e-12);
        let lin: Vec<Complex64> = (0..=200).map(|k| re(k as f64 * powf(0.5, k as f64))).collect();
        assert!((mu_estimate(&lin, 0.25).unwrap() - 0.5).abs() < 0.02);
        let zero = vec![re(0.0); 40];
        assert_eq!(mu_estimate(&zero, 0.25).unwrap_err(), Error::AllZeroTail);
    }

    #[test]
    fn envelope_is_scale_invariant() {
        let r = 0.93;
        let x: Vec<Complex64> = (0..200).map(|k| re(37.0 * powf(r, k as f64) * cos(0.9 * k as f64 + 0.3))).collect();
        let est = mu_envelope_estimate(&x, 0.5).unwrap();
        assert!((est - r).abs() < 1e-3, "{est}");
        let lit = mu_estimate(&x, 0.5).unwrap();
        assert!(lit > est);
        let y: Vec<Complex64> = (0..200).map(|k| c64(0.0, 1e-3 * powf(1.01, k as f64) * sin(2.0 * k as f64 + 1.0))).collect();
        assert!((mu_envelope_estimate(&y, 0.5).unwrap() - 1.01).abs() < 1e-3);
    }

    #[test]
    fn recurrence_recovers_dominant_modulus() {
        // mixture of a slow subdominant mode and an oscillating dominant pair
        let x: Vec<Complex64> = (0..200)
            .map(|k| re(0.3 * powf(0.95, k as f64) + 2.0 * powf(0.97, k as f64) * cos(0.4 * k as f64 + 0.2)))
            .collect();
        assert!((mu_recurrence_estimate(&x, 0.5, 3).unwrap() - 0.97).abs() < 1e-9);
        assert!((mu_envelope_estimate(&x, 0.5).unwrap() - 0.97).abs() > 1e-6);
        let geo: Vec<Complex64> = (0..60).map(|k| re(5.0 * powf(1.02, k as f64))).collect();
        assert!((mu_recurrence_estimate(&geo, 0.5, 3).unwrap() - 1.02).abs() < 1e-12);
        assert_eq!(mu_recurrence_estimate(&[re(0.0); 40], 0.5, 2).unwrap_err(), Error::AllZeroTail);
    }

    #[test]
    fn trichotomy() {
        assert_eq!(classify_stability(0.9, 1e-6), Stability::AsymptoticallyStable);
        assert_eq!(classify_stability(1.0, 1e-6), Stability::LyapunovStable);
        assert_eq!(classify_stability(1.2, 1e-6), Stability::Unstable);
    }

    fn spectrum_from(roots: &[(Complex64, usize)]) -> LimitingSpectrum {
        let char_poly = Poly::from_roots(roots);
        let roots: Vec<Root> = roots.iter().map(|&(value, multiplicity)| Root { value, multiplicity }).collect();
        let mu = roots.iter().map(Root::modulus).fold(0.0, f64::max);
        LimitingSpectrum { period: 1.0, char_poly, roots, mu }
    }

    #[test]
    fn rings() {
        let s = spectrum_from(&[(re(0.5), 1), (re(0.25), 1)]);
        assert_eq!(lambda_set(&s, 1e-6).unwrap().len(), 1);
        assert_eq!(s.next_ring(1e-6), Some(0.25));
        let pair = spectrum_from(&[(c64(0.5 * cos(0.4), 0.5 * sin(0.4)), 1), (c64(0.5 * cos(0.4), -0.5 * sin(0.4)), 1)]);
        assert_eq!(lambda_set(&pair, 1e-6).unwrap().len(), 2);
        let double = spectrum_from(&[(re(0.5), 2)]);
        assert_eq!(lambda_set(&double, 1e-6).unwrap(), vec![Root { value: re(0.5), multiplicity: 2 }]);
        let mut broken = double.clone();
        broken.mu = 0.9;
        assert_eq!(lambda_set(&broken, 1e-6).unwrap_err(), Error::EmptyRing);
    }

    #[test]
    fn spectral_mapping() {
        let a = CMatrix::from_real_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-6.0, -11.0, -6.0]]);
        let s = LimitingSpectrum::new(&a, 0.5, 1e-6).unwrap();
        for lam in [-1.0, -2.0, -3.0] {
            assert!(s.roots.iter().any(|r| close(r.value, re(exp(lam * 0.5)), 1e-8)));
        }
        assert_eq!(s.order(), 3);
        assert!((s.mu - exp(-0.5)).abs() < 1e-10);
    }
}
