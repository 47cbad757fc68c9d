//! Small dense complex matrices.
//!
//! Everything in this crate works with systems of order 1 to roughly 10, so a
//! row-major `Vec` with naive loops beats pulling in a BLAS-backed backend.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math::{abs, hypot, sqrt, Complex64};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Induced operator norm used when a bound is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorNorm {
    /// Maximum absolute row sum.
    #[default]
    Inf,
    /// Maximum absolute column sum.
    One,
    /// Largest singular value.
    Spectral,
}

impl OperatorNorm {
    pub fn name(self) -> &'static str {
        match self {
            OperatorNorm::Inf => "inf",
            OperatorNorm::One => "one",
            OperatorNorm::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Row-major construction; panics if the slice length is not `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has the wrong length");
        CMatrix { rows, cols, data }
    }

    pub fn from_real_rows<const C: usize>(rows: &[[f64; C]]) -> Self {
        Self::from_fn(rows.len(), C, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<Complex64> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_row(&mut self, i: usize, values: &[Complex64]) {
        assert_eq!(values.len(), self.cols);
        self.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(values);
    }

    pub fn set_col(&mut self, j: usize, values: &[Complex64]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).fold(ZERO, |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn powi(&self, e: usize) -> CMatrix {
        assert!(self.is_square());
        let mut result = CMatrix::identity(self.rows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[CMatrix]) -> CMatrix {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        CMatrix { rows, cols, data }
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn norm(&self, which: OperatorNorm) -> f64 {
        match which {
            OperatorNorm::Inf => self.norm_inf(),
            OperatorNorm::One => self.norm_one(),
            OperatorNorm::Spectral => spectral_norm(self),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor != ZERO {
                    for j in k + 1..n {
                        let akj = a[(k, j)];
                        a[(i, j)] -= factor * akj;
                    }
                }
            }
        }
        Ok(Lu { lu: a, perm, sign })
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let lu = self.lu()?;
        Ok(lu.solve_matrix(&CMatrix::identity(self.rows)))
    }

    /// Solve `self * X = rhs`.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        Ok(self.lu()?.solve_matrix(rhs))
    }

    pub fn det(&self) -> Complex64 {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => ZERO,
        }
    }

    /// One-norm condition number `‖A‖₁‖A⁻¹‖₁`; infinite when singular.
    pub fn condition_one(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm_one() * inv.norm_one(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &self.matmul(other) - &other.matmul(self)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn det(&self) -> Complex64 {
        let n = self.lu.rows;
        (0..n).fold(Complex64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col = self.solve_vec(&b.col(j));
            out.set_col(j, &col);
        }
        out
    }
}

/// Givens rotation `[c s; -conj(s) c]` zeroing `b` against `a`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let norm = hypot(na, nb);
    let alpha = a / na;
    (na / norm, alpha * b.conj() / norm)
}

/// Reduce a square matrix to upper Hessenberg form by Householder reflections.
fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = sqrt((k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum());
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * alpha_norm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2vv*/v*v) H (I - 2vv*/v*v)
        for j in 0..n {
            let dot = v.iter().enumerate().fold(ZERO, |acc, (r, vi)| acc + vi.conj() * h[(k + 1 + r, j)]);
            let f = dot * (2.0 / vnorm2);
            for (r, vi) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= vi * f;
            }
        }
        for i in 0..n {
            let dot = v.iter().enumerate().fold(ZERO, |acc, (r, vi)| acc + h[(i, k + 1 + r)] * vi);
            let f = dot * (2.0 / vnorm2);
            for (r, vi) in v.iter().enumerate() {
                h[(i, k + 1 + r)] -= f * vi.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    h
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a square complex matrix via Hessenberg reduction and
/// shifted QR with Wilkinson shifts.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: a.cols,
        });
    }
    if !a.is_finite() {
        return Err(Error::EigenFail);
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut eig = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter_since_deflation = 0usize;
    let mut total_iter = 0usize;
    let max_total = 100 * n.max(4);
    let eps = f64::EPSILON;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let scale = if diag == 0.0 { h.norm_max() } else { diag };
            if sub <= eps * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter_since_deflation = 0;
            continue;
        }
        total_iter += 1;
        iter_since_deflation += 1;
        if total_iter > max_total {
            return Err(Error::EigenFail);
        }
        let shift = if iter_since_deflation % 11 == 10 {
            // exceptional shift breaks cycles such as exact cyclic shifts
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.3 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (idx, k) in (lo..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in lo..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(eig)
}

pub fn spectral_radius(a: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn spectral_norm(a: &CMatrix) -> f64 {
    let gram = a.adjoint().matmul(a);
    match eigenvalues(&gram) {
        Ok(ev) => sqrt(ev.iter().map(|z| abs(z.re)).fold(0.0, f64::max)),
        Err(_) => a.norm_frobenius(),
    }
}

pub fn vec_norm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_norm(v: &[Complex64], which: OperatorNorm) -> f64 {
    match which {
        OperatorNorm::Inf => vec_norm_inf(v),
        OperatorNorm::One => v.iter().map(|z| z.norm()).sum(),
        OperatorNorm::Spectral => sqrt(v.iter().map(|z| z.norm_sqr()).sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::c64;

    fn sorted_by_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn lu_inverse_roundtrip() {
        let a = CMatrix::from_real_rows(&[[4.0, 1.0, 2.0], [1.0, 3.0, 0.5], [2.0, 0.5, 5.0]]);
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        assert!((&prod - &CMatrix::identity(3)).norm_max() < 1e-14);
        let d = a.det();
        assert!((d.re - 44.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn singular_matrix_reports() {
        let a = CMatrix::from_real_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(a.inverse().unwrap_err(), Error::Singular);
        assert!(a.condition_one().is_infinite());
    }

    #[test]
    fn eigenvalues_of_companion() {
        // s^2 + 3 s + 2 -> -1, -2
        let a = CMatrix::from_real_rows(&[[0.0, 1.0], [-2.0, -3.0]]);
        let ev = sorted_by_re(eigenvalues(&a).unwrap());
        assert!((ev[0] - c64(-2.0, 0.0)).norm() < 1e-13);
        assert!((ev[1] - c64(-1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn eigenvalues_complex_pair_and_cycle() {
        let rot = CMatrix::from_real_rows(&[[0.0, -1.0], [1.0, 0.0]]);
        let ev = sorted_by_re(eigenvalues(&rot).unwrap());
        for z in &ev {
            assert!((z.norm() - 1.0).abs() < 1e-13 && z.re.abs() < 1e-13);
        }
        // cyclic permutation: exact QR fixed point without exceptional shifts
        let p = CMatrix::from_real_rows(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let ev = eigenvalues(&p).unwrap();
        for z in &ev {
            assert!((cpowi3(*z) - c64(1.0, 0.0)).norm() < 1e-10, "{z}");
        }
    }

    fn cpowi3(z: Complex64) -> Complex64 {
        z * z * z
    }

    #[test]
    fn eigenvalues_general_5x5() {
        let a = CMatrix::from_fn(5, 5, |i, j| c64(((i * 7 + j * 3) % 5) as f64 - 1.5, ((i + 2 * j) % 3) as f64 * 0.3));
        let ev = eigenvalues(&a).unwrap();
        for z in ev {
            let shifted = &a - &CMatrix::identity(5).scale(z);
            let s = shifted.lu().map(|l| l.det().norm()).unwrap_or(0.0);
            assert!(s < 1e-9 * a.norm_inf().powi(5), "det(A - zI) = {s}");
        }
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = CMatrix::diagonal(&[c64(3.0, 0.0), c64(0.0, -4.0)]);
        assert!((a.norm(OperatorNorm::Spectral) - 4.0).abs() < 1e-12);
        assert!((a.norm(OperatorNorm::Inf) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn powers_match_repeated_products() {
        let a = CMatrix::from_real_rows(&[[0.5, 10.0], [0.0, 0.5]]);
        let p = a.powi(5);
        let q = a.matmul(&a).matmul(&a).matmul(&a).matmul(&a);
        assert!((&p - &q).norm_max() < 1e-12);
    }
}
