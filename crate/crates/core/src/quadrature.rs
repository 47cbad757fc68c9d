//! Gauss–Kronrod 7/15 quadrature for vector-valued complex integrands.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point panel on `[a, b]`: abscissae with Kronrod and embedded Gauss weights.
#[derive(Debug, Clone)]
pub struct Panel {
    pub nodes: [f64; 15],
    pub kronrod: [f64; 15],
    pub gauss: [f64; 15],
}

pub fn gk15_panel(a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut nodes = [0.0; 15];
    let mut kronrod = [0.0; 15];
    let mut gauss = [0.0; 15];
    for i in 0..7 {
        nodes[2 * i] = c - h * XGK[i];
        nodes[2 * i + 1] = c + h * XGK[i];
        kronrod[2 * i] = h * WGK[i];
        kronrod[2 * i + 1] = h * WGK[i];
        if i % 2 == 1 {
            gauss[2 * i] = h * WG[i / 2];
            gauss[2 * i + 1] = h * WG[i / 2];
        }
    }
    nodes[14] = c;
    kronrod[14] = h * WGK[7];
    gauss[14] = h * WG[3];
    Panel { nodes, kronrod, gauss }
}

/// Apply a precomputed panel to sampled values; returns (Kronrod, Gauss) sums.
pub fn apply_panel(panel: &Panel, values: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<Complex64>) {
    let dim = values[0].len();
    let mut k = vec![Complex64::new(0.0, 0.0); dim];
    let mut g = vec![Complex64::new(0.0, 0.0); dim];
    for (i, v) in values.iter().enumerate() {
        for d in 0..dim {
            k[d] += v[d] * panel.kronrod[i];
            g[d] += v[d] * panel.gauss[i];
        }
    }
    (k, g)
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

struct Interval {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

fn eval_interval<F>(f: &mut F, a: f64, b: f64) -> Interval
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let panel = gk15_panel(a, b);
    let values: Vec<Vec<Complex64>> = panel.nodes.iter().map(|&x| f(x)).collect();
    let (k, g) = apply_panel(&panel, &values);
    let error = diff_norm(&k, &g);
    Interval { a, b, value: k, error }
}

/// Adaptive bisection until the summed error estimate is below
/// `max(abs_tol, rel_tol·‖I‖)`.
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> Result<Vec<Complex64>>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    if a == b {
        let dim = f(a).len();
        return Ok(vec![Complex64::new(0.0, 0.0); dim]);
    }
    let mut intervals = vec![eval_interval(&mut f, a, b)];
    loop {
        let dim = intervals[0].value.len();
        let mut total = vec![Complex64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for iv in &intervals {
            for d in 0..dim {
                total[d] += iv.value[d];
            }
            err += iv.error;
        }
        let target = abs_tol.max(rel_tol * vec_norm(&total));
        if err <= target {
            return Ok(total);
        }
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureFail { estimate: err });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, iv)| if iv.error > best.1 { (i, iv.error) } else { best });
        let iv = intervals.swap_remove(worst);
        let mid = 0.5 * (iv.a + iv.b);
        if mid <= iv.a || mid >= iv.b {
            return Err(Error::QuadratureFail { estimate: err });
        }
        intervals.push(eval_interval(&mut f, iv.a, mid));
        intervals.push(eval_interval(&mut f, mid, iv.b));
    }
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    integrate_adaptive(|x| vec![f(x)], a, b, tol, tol, 4096).map(|v| v[0])
}

/// All abscissae of `panels` equal-width GK15 panels on `[a, b]`, in increasing order.
pub fn composite_panels(a: f64, b: f64, panels: usize) -> Vec<Panel> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            let hi = if p + 1 == panels { b } else { a + h * (p + 1) as f64 };
            gk15_panel(lo, hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{c64, cos, exp, sin};

    #[test]
    fn polynomial_exact() {
        // GK15 is exact through degree 22
        let v = integrate_scalar(|x| c64(x.powi(10), 0.0), 0.0, 1.0, 1e-14).unwrap();
        assert!((v.re - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate_scalar(|x| c64(cos(20.0 * x), sin(x)), 0.0, 3.0, 1e-13).unwrap();
        assert!((v.re - sin(60.0) / 20.0).abs() < 1e-12);
        assert!((v.im - (1.0 - cos(3.0))).abs() < 1e-12);
    }

    #[test]
    fn vector_integrand() {
        let v = integrate_adaptive(|x| vec![c64(exp(-x), 0.0), c64(0.0, 2.0 * x)], 0.0, 2.0, 1e-13, 1e-13, 1000).unwrap();
        assert!((v[0].re - (1.0 - exp(-2.0))).abs() < 1e-13);
        assert!((v[1].im - 4.0).abs() < 1e-13);
    }
}
