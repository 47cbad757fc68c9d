//! Dense complex polynomials and truncated Taylor series.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::math::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Polynomial with coefficients in ascending powers: `coeffs[i]` multiplies `z^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![ONE] }
    }

    pub fn monomial(c: Complex64, power: usize) -> Self {
        let mut coeffs = vec![ZERO; power + 1];
        coeffs[power] = c;
        Poly::new(coeffs)
    }

    /// Monic polynomial from coefficients in descending powers, leading 1 implied.
    pub fn from_monic_descending(tail: &[Complex64]) -> Self {
        let mut coeffs: Vec<Complex64> = tail.iter().rev().copied().collect();
        coeffs.push(ONE);
        Poly::new(coeffs)
    }

    /// `∏ (z − r)^m`.
    pub fn from_roots(roots: &[(Complex64, usize)]) -> Self {
        let mut p = Poly::one();
        for &(r, m) in roots {
            let lin = Poly::new(vec![-r, ONE]);
            for _ in 0..m {
                p = p.mul(&lin);
            }
        }
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&ZERO) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn monic(&self) -> Result<Poly> {
        let lead = self.leading();
        if lead == ZERO {
            return Err(Error::InvalidArgument("zero polynomial has no monic form"));
        }
        Ok(self.scale(ONE / lead))
    }

    /// Companion matrix whose characteristic polynomial is the monic form of `self`.
    pub fn companion(&self) -> Result<CMatrix> {
        let p = self.monic()?;
        let n = p.degree().unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidArgument("constant polynomial has no companion"));
        }
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = ONE;
        }
        for j in 0..n {
            m[(n - 1, j)] = -p.coeff(j);
        }
        Ok(m)
    }

    /// Taylor coefficients about `center` up to and including `(z−center)^order`.
    pub fn taylor_at(&self, center: Complex64, order: usize) -> Series {
        // repeated synthetic division by (z − center)
        let mut work: Vec<Complex64> = self.coeffs.clone();
        let mut out = Vec::with_capacity(order + 1);
        for _ in 0..=order {
            if work.is_empty() {
                out.push(ZERO);
                continue;
            }
            let mut quotient = vec![ZERO; work.len().saturating_sub(1)];
            let mut acc = ZERO;
            for i in (0..work.len()).rev() {
                acc = acc * center + work[i];
                if i > 0 {
                    quotient[i - 1] = acc;
                }
            }
            out.push(acc);
            work = quotient;
        }
        Series::new(out)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Truncated power series in `(z − center)`; all operations keep the length.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

impl Series {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Series { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Series { coeffs: vec![ZERO; len] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or(ZERO)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn truncate(&self, len: usize) -> Series {
        Series::new((0..len).map(|i| self.coeff(i)).collect())
    }

    /// Drop the first `shift` coefficients (division by `(z − center)^shift`).
    pub fn shift_down(&self, shift: usize) -> Series {
        Series::new(self.coeffs.iter().skip(shift).copied().collect())
    }

    pub fn add(&self, other: &Series) -> Series {
        let len = self.len().min(other.len());
        Series::new((0..len).map(|i| self.coeffs[i] + other.coeffs[i]).collect())
    }

    pub fn mul(&self, other: &Series) -> Series {
        let len = self.len().min(other.len());
        let mut out = vec![ZERO; len];
        for i in 0..len {
            for j in 0..=i {
                out[i] += self.coeffs[j] * other.coeffs[i - j];
            }
        }
        Series::new(out)
    }

    /// `self / other`; requires a nonzero constant term in `other`.
    pub fn div(&self, other: &Series) -> Result<Series> {
        let len = self.len().min(other.len());
        let d0 = other.coeff(0);
        if d0 == ZERO {
            return Err(Error::DividedPole);
        }
        let mut out = vec![ZERO; len];
        for i in 0..len {
            let mut acc = self.coeffs[i];
            for j in 1..=i {
                acc -= other.coeffs[j] * out[i - j];
            }
            out[i] = acc / d0;
        }
        Ok(Series::new(out))
    }
}
