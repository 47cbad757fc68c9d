//! Trajectories and evolution operators of `ż = A(t)z`, the matrix
//! exponential, the commuting closed form and the Volterra representation.

use alloc::vec;
use alloc::vec::Vec;

use crate::companion::LinearSystem;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::math::{abs, ceil, log2, powf, sqrt, Complex64};
use crate::quadrature::{composite_panels, integrate_adaptive};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default local error tolerance of the integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub tolerance: f64,
}

impl Trajectory {
    /// First component `x(t) = e₁ᵀz(t)` at every stored time.
    pub fn first_component(&self) -> Vec<Complex64> {
        self.states.iter().map(|s| s[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOperator {
    pub t_from: f64,
    pub t_to: f64,
    pub matrix: CMatrix,
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// fifth-order minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn check_tol(tol: f64) -> Result<()> {
    if tol > 1e-14 && tol < 1e-2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("tolerance must lie in (1e-14, 1e-2)"))
    }
}

fn axpy_stage(y: &[Complex64], h: f64, coeffs: &[f64], ks: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out = y.to_vec();
    for (a, k) in coeffs.iter().zip(ks) {
        if *a == 0.0 {
            continue;
        }
        for (o, ki) in out.iter_mut().zip(k) {
            *o += ki * (h * a);
        }
    }
    out
}

struct Rhs<'a, S: LinearSystem + ?Sized> {
    system: &'a S,
}

impl<S: LinearSystem + ?Sized> Rhs<'_, S> {
    fn eval(&self, t: f64, segment_end: f64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let a = if t >= segment_end {
            self.system.matrix_left(segment_end)?
        } else {
            self.system.matrix(t)?
        };
        Ok(a.mul_vec(y))
    }
}

fn error_norm(y: &[Complex64], ynew: &[Complex64], err: &[Complex64], tol: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let sum: f64 = y
        .iter()
        .zip(ynew)
        .zip(err)
        .map(|((a, b), e)| {
            let sk = tol + tol * a.norm().max(b.norm());
            let r = e.norm() / sk;
            r * r
        })
        .sum();
    sqrt(sum / n)
}

fn scaled_norm(v: &[Complex64], y: &[Complex64], tol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    sqrt(
        v.iter()
            .zip(y)
            .map(|(a, b)| {
                let r = a.norm() / (tol + tol * b.norm());
                r * r
            })
            .sum::<f64>()
            / n,
    )
}

fn initial_step<S: LinearSystem + ?Sized>(rhs: &Rhs<S>, t: f64, seg_end: f64, y: &[Complex64], f0: &[Complex64], tol: f64) -> Result<f64> {
    let d0 = scaled_norm(y, y, tol);
    let d1 = scaled_norm(f0, y, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(seg_end - t);
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let f1 = rhs.eval(t + h0, seg_end, &y1)?;
    let diff: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&diff, y, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        powf(0.01 / d1.max(d2), 0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrate `y' = A(t)y` through the sorted `times`, returning the state at each.
fn dopri<S: LinearSystem + ?Sized>(system: &S, y0: &[Complex64], times: &[f64], tol: f64) -> Result<Vec<Vec<Complex64>>> {
    let rhs = Rhs { system };
    let mut out = Vec::with_capacity(times.len());
    out.push(y0.to_vec());
    if times.len() == 1 {
        return Ok(out);
    }
    let mut t = times[0];
    let t_end = *times.last().expect("nonempty grid");
    let mut stops: Vec<f64> = system.breakpoints().into_iter().filter(|&b| b > t && b < t_end).collect();
    stops.push(t_end);
    let mut y = y0.to_vec();
    let mut next_out = 1;
    let mut err_old = 1e-4;
    let mut steps = 0usize;
    let mut h: Option<f64> = None;
    for &seg_end in &stops {
        // FSAL restarts at every segment boundary
        let mut k1 = rhs.eval(t, seg_end, &y)?;
        let mut hcur = match h {
            Some(h) => h,
            None => initial_step(&rhs, t, seg_end, &y, &k1, tol)?,
        };
        let mut rejected_last = false;
        while t < seg_end {
            let target = if next_out < times.len() { times[next_out].min(seg_end) } else { seg_end };
            let mut step = hcur.min(target - t);
            let hits_target = step >= target - t;
            if hits_target {
                step = target - t;
            }
            if step < 1e-14 * t.abs().max(1.0) && !hits_target {
                return Err(Error::StepUnderflow { t, h: step });
            }
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StepUnderflow { t, h: step });
            }
            let mut ks: Vec<Vec<Complex64>> = Vec::with_capacity(7);
            ks.push(k1.clone());
            let stages: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
            for (s, coeffs) in stages.iter().enumerate() {
                let ys = axpy_stage(&y, step, coeffs, &ks);
                let ts = if s + 1 == 5 { t + step } else { t + C[s + 1] * step };
                let ts = if hits_target && s + 1 == 5 { target } else { ts };
                ks.push(rhs.eval(ts, seg_end, &ys)?);
            }
            let ynew = axpy_stage(&y, step, &B, &ks);
            let t_new = if hits_target { target } else { t + step };
            let k7 = rhs.eval(t_new, seg_end, &ynew)?;
            ks.push(k7);
            let err_vec: Vec<Complex64> = (0..y.len())
                .map(|i| ks.iter().zip(E.iter()).fold(ZERO, |acc, (k, e)| acc + k[i] * (step * e)))
                .collect();
            let err = error_norm(&y, &ynew, &err_vec, tol);
            if !err.is_finite() || ynew.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                hcur = step * 0.2;
                rejected_last = true;
                if hcur < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h: hcur });
                }
                continue;
            }
            if err <= 1.0 {
                let err_c = err.max(1e-10);
                let mut fac = 0.9 * powf(err_c, -0.17) * powf(err_old, 0.04);
                fac = fac.clamp(0.2, 5.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                err_old = err.max(1e-4);
                // a step clipped to an output time says nothing new about the step size
                let proposed = step * fac;
                hcur = if hits_target { hcur.max(proposed) } else { proposed };
                t = t_new;
                y = ynew;
                k1 = ks.pop().expect("seven stages");
                rejected_last = false;
                while next_out < times.len() && times[next_out] <= t {
                    out.push(y.clone());
                    next_out += 1;
                }
            } else {
                let fac = (0.9 * powf(err, -0.2)).max(0.2);
                hcur = step * fac;
                rejected_last = true;
                if hcur < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, h: hcur });
                }
            }
        }
        h = Some(hcur);
    }
    while out.len() < times.len() {
        out.push(y.clone());
    }
    Ok(out)
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("time grid must be nonempty"));
    }
    if t_grid[0] < 0.0 || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid must be finite and nonnegative"));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Solve `ż = A(t)z`, `z(t_grid[0]) = z0`, reporting the state at every grid time.
pub fn integrate<S: LinearSystem + ?Sized>(system: &S, z0: &[Complex64], t_grid: &[f64], tol: f64) -> Result<Trajectory> {
    check_tol(tol)?;
    check_grid(t_grid)?;
    if z0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: z0.len(),
        });
    }
    let states = dopri(system, z0, t_grid, tol)?;
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        tolerance: tol,
    })
}

fn unit(n: usize, j: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; n];
    v[j] = Complex64::new(1.0, 0.0);
    v
}

/// `Ψ(t, t_from)` for every `t` in `t_to` (sorted, each `≥ t_from`).
pub fn evolution_operators<S: LinearSystem + ?Sized>(system: &S, t_from: f64, t_to: &[f64], tol: f64) -> Result<Vec<CMatrix>> {
    check_tol(tol)?;
    let n = system.dim();
    let mut grid = vec![t_from];
    let mut index = Vec::with_capacity(t_to.len());
    for &t in t_to {
        if t < t_from {
            return Err(Error::InvalidArgument("evolution operators run forward in time"));
        }
        if t > *grid.last().expect("nonempty") {
            grid.push(t);
        } else if t < *grid.last().expect("nonempty") {
            return Err(Error::InvalidArgument("target times must be sorted"));
        }
        index.push(grid.len() - 1);
    }
    check_grid(&grid)?;
    let mut ops = vec![CMatrix::zeros(n, n); grid.len()];
    for j in 0..n {
        let states = dopri(system, &unit(n, j), &grid, tol)?;
        for (op, s) in ops.iter_mut().zip(&states) {
            op.set_col(j, s);
        }
    }
    Ok(index.into_iter().map(|i| ops[i].clone()).collect())
}

/// `Ψ(t_to, t_from)`; exactly the identity when the times coincide.
pub fn evolution_operator<S: LinearSystem + ?Sized>(system: &S, t_to: f64, t_from: f64, tol: f64) -> Result<EvolutionOperator> {
    if t_to < t_from || t_from < 0.0 {
        return Err(Error::InvalidArgument("evolution operators need t_to >= t_from >= 0"));
    }
    let matrix = if t_to == t_from {
        CMatrix::identity(system.dim())
    } else {
        evolution_operators(system, t_from, &[t_to], tol)?.remove(0)
    };
    Ok(EvolutionOperator { t_from, t_to, matrix })
}

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1, 2.097847961257068, 5.371920351148152];

fn pade_low(a: &CMatrix, b: &[f64]) -> Result<CMatrix> {
    let n = a.rows();
    let a2 = a.matmul(a);
    let mut power = CMatrix::identity(n);
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for pair in b.chunks(2) {
        v = &v + &power.scale_real(pair[0]);
        u = &u + &power.scale_real(pair[1]);
        power = power.matmul(&a2);
    }
    let u = a.matmul(&u);
    (&v - &u).solve(&(&v + &u))
}

fn pade13(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let b = &B13;
    let id = CMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = &(&a6.scale_real(b[13]) + &a4.scale_real(b[11])) + &a2.scale_real(b[9]);
    let u_sum = &(&(&(&a6.matmul(&inner_u) + &a6.scale_real(b[7])) + &a4.scale_real(b[5])) + &a2.scale_real(b[3])) + &id.scale_real(b[1]);
    let u = a.matmul(&u_sum);
    let inner_v = &(&a6.scale_real(b[12]) + &a4.scale_real(b[10])) + &a2.scale_real(b[8]);
    let v = &(&(&(&a6.matmul(&inner_v) + &a6.scale_real(b[6])) + &a4.scale_real(b[4])) + &a2.scale_real(b[2])) + &id.scale_real(b[0]);
    (&v - &u).solve(&(&v + &u))
}

/// `e^{M·T}` by scaling and squaring with diagonal Padé approximants.
pub fn matrix_exponential(m: &CMatrix, t: f64) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    if !m.is_finite() || !t.is_finite() {
        return Err(Error::Overflow);
    }
    let a = m.scale_real(t);
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::Overflow);
    }
    let singular = |e: Error| if e == Error::Singular { Error::Overflow } else { e };
    let result = if norm <= THETA[0] {
        pade_low(&a, &B3).map_err(singular)?
    } else if norm <= THETA[1] {
        pade_low(&a, &B5).map_err(singular)?
    } else if norm <= THETA[2] {
        pade_low(&a, &B7).map_err(singular)?
    } else if norm <= THETA[3] {
        pade_low(&a, &B9).map_err(singular)?
    } else {
        let s = ceil(log2(norm / THETA[4])).max(0.0);
        if s > 1023.0 {
            return Err(Error::Overflow);
        }
        let s = s as i32;
        let scaled = a.scale_real(powf(2.0, -s as f64));
        let mut r = pade13(&scaled).map_err(singular)?;
        for _ in 0..s {
            r = r.matmul(&r);
            if !r.is_finite() {
                return Err(Error::Overflow);
            }
        }
        r
    };
    if !result.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(result)
}

/// `∫_a^b A(τ) dτ`, split at the system's breakpoints.
pub fn integral_of_matrix<S: LinearSystem + ?Sized>(system: &S, a: f64, b: f64, tol: f64) -> Result<CMatrix> {
    let n = system.dim();
    let mut edges = vec![a];
    edges.extend(system.breakpoints().into_iter().filter(|&p| p > a && p < b));
    edges.push(b);
    let mut total = CMatrix::zeros(n, n);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut failure = None;
        let v = integrate_adaptive(
            |s| match system.matrix(s) {
                Ok(m) => m.as_slice().to_vec(),
                Err(e) => {
                    failure = Some(e);
                    vec![ZERO; n * n]
                }
            },
            lo,
            hi,
            tol * 1e-2,
            tol * 1e-2,
            2048,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        total = &total + &CMatrix::from_row_major(n, n, v);
    }
    Ok(total)
}

const COMMUTE_POINTS: usize = 8;

/// Whether `A(s)` commutes with `∫_{t_from}^s A` at `COMMUTE_POINTS` times `s ∈ (t_from, t]`.
pub fn commutes<S: LinearSystem + ?Sized>(system: &S, t: f64, t_from: f64) -> bool {
    if t <= t_from {
        return true;
    }
    let mut j = CMatrix::zeros(system.dim(), system.dim());
    let mut prev = t_from;
    for i in 1..=COMMUTE_POINTS {
        let s = t_from + (t - t_from) * i as f64 / COMMUTE_POINTS as f64;
        let piece = match integral_of_matrix(system, prev, s, 1e-12) {
            Ok(p) => p,
            Err(_) => return false,
        };
        j = &j + &piece;
        prev = s;
        let a = match system.matrix(s) {
            Ok(a) => a,
            Err(_) => return false,
        };
        let comm = a.commutator(&j).norm_inf();
        if comm > 1e-10 * (1.0 + a.norm_inf() * j.norm_inf()) {
            return false;
        }
    }
    true
}

/// `e^{∫_{t_from}^{t_to} A}`, valid when `A` commutes with its integral.
pub fn commuting_evolution<S: LinearSystem + ?Sized>(system: &S, t_to: f64, t_from: f64, quad_tol: f64) -> Result<CMatrix> {
    if t_to < t_from {
        return Err(Error::InvalidArgument("evolution operators need t_to >= t_from"));
    }
    if !commutes(system, t_to, t_from) {
        return Err(Error::NotCommuting);
    }
    let j = integral_of_matrix(system, t_from, t_to, quad_tol)?;
    matrix_exponential(&j, 1.0)
}

fn volterra_integral<S: LinearSystem + ?Sized>(system: &S, split: &CMatrix, t: f64, panels_per_segment: usize, tol: f64) -> Result<CMatrix> {
    let n = system.dim();
    let mut edges = vec![0.0];
    edges.extend(system.breakpoints().into_iter().filter(|&p| p > 0.0 && p < t));
    edges.push(t);
    let panels: Vec<_> = edges.windows(2).flat_map(|w| composite_panels(w[0], w[1], panels_per_segment)).collect();
    let nodes: Vec<f64> = panels.iter().flat_map(|p| p.nodes.iter().copied()).collect();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).expect("finite nodes"));
    let sorted: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
    let psi_sorted = evolution_operators(system, 0.0, &sorted, tol)?;
    let mut psi = vec![CMatrix::zeros(n, n); nodes.len()];
    for (rank, &i) in order.iter().enumerate() {
        psi[i] = psi_sorted[rank].clone();
    }
    let mut total = CMatrix::zeros(n, n);
    for (pi, panel) in panels.iter().enumerate() {
        for q in 0..15 {
            let idx = pi * 15 + q;
            let tau = panel.nodes[q];
            let perturbation = &system.matrix(tau)? - split;
            let decay = matrix_exponential(split, -tau)?;
            let integrand = decay.matmul(&perturbation).matmul(&psi[idx]);
            total = &total + &integrand.scale_real(panel.kronrod[q]);
        }
    }
    Ok(total)
}

/// `‖Ψ(t,0) − e^{Ât}(I + ∫₀ᵗ e^{−Âτ}(A(τ) − Â)Ψ(τ,0)dτ)‖_∞` for the split `Â`.
pub fn volterra_residual<S: LinearSystem + ?Sized>(system: &S, split: &CMatrix, t: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let n = system.dim();
    if split.rows() != n || split.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: split.rows(),
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let psi = evolution_operator(system, t, 0.0, tol)?.matrix;
    let mut panels = (ceil(t) as usize).max(1);
    let mut previous = volterra_integral(system, split, t, panels, tol)?;
    let mut integral = previous.clone();
    for _ in 0..8 {
        panels *= 2;
        integral = volterra_integral(system, split, t, panels, tol)?;
        let change = (&integral - &previous).norm_inf();
        if change <= tol * (1.0 + integral.norm_inf()) {
            break;
        }
        previous = integral.clone();
    }
    let rhs = matrix_exponential(split, t)?.matmul(&(&CMatrix::identity(n) + &integral));
    Ok((&psi - &rhs).norm_inf())
}

/// `‖Ψ(t,0) − Ψ(t,t₁)Ψ(t₁,0)‖_∞`.
pub fn semigroup_residual<S: LinearSystem + ?Sized>(system: &S, t: f64, t1: f64, tol: f64) -> Result<f64> {
    let full = evolution_operator(system, t, 0.0, tol)?.matrix;
    let first = evolution_operator(system, t1, 0.0, tol)?.matrix;
    let second = evolution_operator(system, t, t1, tol)?.matrix;
    Ok((&full - &second.matmul(&first)).norm_inf())
}

/// Relative size of `x` against `y`, for matching operators of unequal magnitude.
pub fn relative_gap(x: &CMatrix, y: &CMatrix) -> f64 {
    (x - y).norm_inf() / (1.0 + abs(y.norm_inf()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::companion::{CompanionSystem, ConstantSystem, FnSystem};
    use crate::math::{c64, exp, ln, re};

    fn scalar(model: CoefficientModel) -> CompanionSystem {
        CompanionSystem::new(vec![CoefficientModel::constant(0, re(1.0)), model]).unwrap()
    }

    #[test]
    fn scalar_decay() {
        let sys = scalar(CoefficientModel::constant(1, re(1.0)));
        let tr = integrate(&sys, &[re(1.0)], &[0.0, 1.0], 1e-10).unwrap();
        assert!((tr.states[1][0].re - exp(-1.0)).abs() < 1e-10);
        assert_eq!(tr.states[0], vec![re(1.0)]);
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let sys = CompanionSystem::new(vec![
            CoefficientModel::constant(0, re(1.0)),
            CoefficientModel::exp_perturbed(1, re(1.0), re(2.0), 1.0).unwrap(),
            CoefficientModel::constant(2, re(3.0)),
        ])
        .unwrap();
        let tr = integrate(&sys, &[re(0.0), re(0.0)], &[0.0, 1.0, 5.0], 1e-10).unwrap();
        assert!(tr.states.iter().flatten().all(|z| *z == re(0.0)));
    }

    #[test]
    fn expm_examples() {
        let z = matrix_exponential(&CMatrix::zeros(3, 3), 1.0).unwrap();
        assert_eq!(z, CMatrix::identity(3));
        let nil = CMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let e = matrix_exponential(&nil, 1.0).unwrap();
        assert!((&e - &CMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]])).norm_max() < 1e-15);
        let d = CMatrix::from_real_rows(&[[-1.0, 0.0], [0.0, -2.0]]);
        let e = matrix_exponential(&d, ln(2.0)).unwrap();
        assert!((&e - &CMatrix::from_real_rows(&[[0.5, 0.0], [0.0, 0.25]])).norm_max() < 1e-15);
    }

    #[test]
    fn expm_large_norm_and_overflow() {
        let d = CMatrix::diagonal(&[re(-30.0), c64(0.0, 40.0)]);
        let e = matrix_exponential(&d, 1.0).unwrap();
        assert!((e[(0, 0)].re - exp(-30.0)).abs() < 1e-25);
        assert!((e[(1, 1)] - c64(crate::math::cos(40.0), crate::math::sin(40.0))).norm() < 1e-12);
        let big = CMatrix::diagonal(&[re(1000.0)]);
        assert_eq!(matrix_exponential(&big, 1.0).unwrap_err(), Error::Overflow);
    }

    #[test]
    fn identity_at_equal_times() {
        let sys = scalar(CoefficientModel::constant(1, re(4.0)));
        let op = evolution_operator(&sys, 2.0, 2.0, 1e-10).unwrap();
        assert_eq!(op.matrix, CMatrix::identity(1));
    }

    #[test]
    fn scalar_time_varying_operator() {
        // α1(t) = 1 − e^{−t}: Ψ(1,0) = exp(−(1 − (1 − e^{−1}))) = exp(−e^{−1})
        let sys = scalar(CoefficientModel::exp_approach(1, re(1.0), 1.0, 0.0).unwrap());
        let expect = exp(-exp(-1.0));
        let op = evolution_operator(&sys, 1.0, 0.0, 1e-10).unwrap();
        assert!((op.matrix[(0, 0)].re - expect).abs() < 1e-9);
        let closed = commuting_evolution(&sys, 1.0, 0.0, 1e-12).unwrap();
        assert!((closed[(0, 0)].re - expect).abs() < 1e-10);
    }

    #[test]
    fn commutation_examples() {
        let a = CMatrix::from_real_rows(&[[0.0, 1.0], [-2.0, -3.0]]);
        assert!(commutes(&ConstantSystem(a.clone()), 1.0, 0.0));
        let sys = CompanionSystem::new(vec![
            CoefficientModel::constant(0, re(1.0)),
            CoefficientModel::constant(1, re(1.0)),
            CoefficientModel::exp_perturbed(2, re(0.0), re(1.0), 1.0).unwrap(),
        ])
        .unwrap();
        assert!(!commutes(&sys, 1.0, 0.0));
        assert_eq!(commuting_evolution(&sys, 1.0, 0.0, 1e-12).unwrap_err(), Error::NotCommuting);
        let closed = commuting_evolution(&ConstantSystem(a.clone()), 2.0, 0.5, 1e-12).unwrap();
        assert!((&closed - &matrix_exponential(&a, 1.5).unwrap()).norm_max() < 1e-12);
    }

    #[test]
    fn diagonal_time_varying_closed_form() {
        let sys = FnSystem::new(2, |t| CMatrix::diagonal(&[re(-1.0 + exp(-t)), c64(0.0, t)]));
        let closed = commuting_evolution(&sys, 2.0, 0.0, 1e-12).unwrap();
        let j0 = -2.0 + (1.0 - exp(-2.0));
        assert!((closed[(0, 0)].re - exp(j0)).abs() < 1e-11);
        assert!((closed[(1, 1)] - c64(crate::math::cos(2.0), crate::math::sin(2.0))).norm() < 1e-11);
        let psi = evolution_operator(&sys, 2.0, 0.0, 1e-10).unwrap().matrix;
        assert!((&psi - &closed).norm_max() < 1e-8);
    }

    #[test]
    fn volterra_examples() {
        let a = CMatrix::from_real_rows(&[[0.0, 1.0], [-2.0, -3.0]]);
        let r = volterra_residual(&ConstantSystem(a.clone()), &a, 2.0, 1e-10).unwrap();
        assert!(r <= 1e-10, "{r}");
        let sys = scalar(CoefficientModel::exp_perturbed(1, re(1.0), re(1.0), 1.0).unwrap());
        let split = CMatrix::from_real_rows(&[[-1.0]]);
        let r = volterra_residual(&sys, &split, 2.0, 1e-10).unwrap();
        assert!(r <= 1e-8, "{r}");
        assert_eq!(volterra_residual(&sys, &split, 0.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn breakpoints_are_respected() {
        use crate::coefficients::Breakpoint;
        // ẋ = −x on [0,1), ẋ = −3x afterwards
        let sys = scalar(
            CoefficientModel::piecewise(1, vec![Breakpoint { t: 0.0, value: re(1.0) }, Breakpoint { t: 1.0, value: re(3.0) }])
                .unwrap(),
        );
        let tr = integrate(&sys, &[re(1.0)], &[0.0, 1.0, 2.0], 1e-10).unwrap();
        assert!((tr.states[1][0].re - exp(-1.0)).abs() < 1e-10);
        assert!((tr.states[2][0].re - exp(-4.0)).abs() < 1e-10);
    }
}
