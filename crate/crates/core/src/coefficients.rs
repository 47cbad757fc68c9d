//! Time-varying coefficient functions and their limits.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, Complex64};

/// One `(t, value)` pair of a step function; the value holds from `t` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub t: f64,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    Constant(Complex64),
    /// `limit·(1 − e^{−rate(t−onset)})` from `onset` on, zero before.
    ExpApproach { limit: Complex64, rate: f64, onset: f64 },
    /// `limit + amplitude·e^{−rate·t}`.
    ExpPerturbed { limit: Complex64, amplitude: Complex64, rate: f64 },
    /// Step function holding the last value forever.
    PiecewiseConstant(Vec<Breakpoint>),
    /// Left-continuous table lookup with an optional declared limit.
    Tabulated { table: Vec<Breakpoint>, limit: Option<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    pub index: usize,
    pub kind: CoefficientKind,
}

fn check_table(table: &[Breakpoint]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if table.windows(2).any(|w| !(w[0].t < w[1].t)) {
        return Err(Error::InvalidArgument("breakpoints must be strictly increasing"));
    }
    if table.iter().any(|b| !b.t.is_finite() || !b.value.re.is_finite() || !b.value.im.is_finite()) {
        return Err(Error::InvalidArgument("breakpoints must be finite"));
    }
    Ok(())
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("decay rate must be positive and finite"))
    }
}

/// Value of the last breakpoint with `t_j ≤ t` (or `< t` when `left`).
fn lookup(table: &[Breakpoint], t: f64, left: bool) -> Result<Complex64> {
    let first = table.first().ok_or(Error::EmptyTable)?;
    let count = if left {
        table.partition_point(|b| b.t < t)
    } else {
        table.partition_point(|b| b.t <= t)
    };
    match count {
        // at the very first breakpoint the left limit is the breakpoint value itself
        0 if left && t == first.t => Ok(first.value),
        0 => Err(Error::OutsideTable { t, start: first.t }),
        c => Ok(table[c - 1].value),
    }
}

impl CoefficientModel {
    pub fn constant(index: usize, value: Complex64) -> Self {
        CoefficientModel {
            index,
            kind: CoefficientKind::Constant(value),
        }
    }

    pub fn exp_approach(index: usize, limit: Complex64, rate: f64, onset: f64) -> Result<Self> {
        check_rate(rate)?;
        if !(onset >= 0.0 && onset.is_finite()) {
            return Err(Error::InvalidArgument("onset must be a finite nonnegative time"));
        }
        Ok(CoefficientModel {
            index,
            kind: CoefficientKind::ExpApproach { limit, rate, onset },
        })
    }

    pub fn exp_perturbed(index: usize, limit: Complex64, amplitude: Complex64, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(CoefficientModel {
            index,
            kind: CoefficientKind::ExpPerturbed { limit, amplitude, rate },
        })
    }

    pub fn piecewise(index: usize, breakpoints: Vec<Breakpoint>) -> Result<Self> {
        check_table(&breakpoints)?;
        Ok(CoefficientModel {
            index,
            kind: CoefficientKind::PiecewiseConstant(breakpoints),
        })
    }

    pub fn tabulated(index: usize, table: Vec<Breakpoint>, limit: Option<Complex64>) -> Result<Self> {
        check_table(&table)?;
        Ok(CoefficientModel {
            index,
            kind: CoefficientKind::Tabulated { table, limit },
        })
    }

    fn eval_inner(&self, t: f64, left: bool) -> Result<Complex64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        match &self.kind {
            CoefficientKind::Constant(c) => Ok(*c),
            CoefficientKind::ExpApproach { limit, rate, onset } => {
                if t < *onset {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    Ok(limit * (1.0 - exp(-rate * (t - onset))))
                }
            }
            CoefficientKind::ExpPerturbed { limit, amplitude, rate } => Ok(limit + amplitude * exp(-rate * t)),
            CoefficientKind::PiecewiseConstant(table) | CoefficientKind::Tabulated { table, .. } => lookup(table, t, left),
        }
    }

    /// `α_i(t)`.
    pub fn eval(&self, t: f64) -> Result<Complex64> {
        self.eval_inner(t, false)
    }

    /// `lim_{s↑t} α_i(s)`; differs from [`eval`](Self::eval) only at step breakpoints.
    pub fn eval_left_limit(&self, t: f64) -> Result<Complex64> {
        self.eval_inner(t, true)
    }

    /// `α_i* = lim_{t→∞} α_i(t)`.
    pub fn limit(&self) -> Result<Complex64> {
        match &self.kind {
            CoefficientKind::Constant(c) => Ok(*c),
            CoefficientKind::ExpApproach { limit, .. } | CoefficientKind::ExpPerturbed { limit, .. } => Ok(*limit),
            CoefficientKind::PiecewiseConstant(table) => table.last().map(|b| b.value).ok_or(Error::EmptyTable),
            CoefficientKind::Tabulated { limit, .. } => limit.ok_or(Error::NoLimit { index: self.index }),
        }
    }

    /// Times at which the coefficient is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            CoefficientKind::Constant(_) | CoefficientKind::ExpPerturbed { .. } => Vec::new(),
            CoefficientKind::ExpApproach { onset, .. } => {
                if *onset > 0.0 {
                    alloc::vec![*onset]
                } else {
                    Vec::new()
                }
            }
            CoefficientKind::PiecewiseConstant(table) | CoefficientKind::Tabulated { table, .. } => table.iter().map(|b| b.t).collect(),
        }
    }

    /// First time at which the model can be evaluated.
    pub fn start_time(&self) -> f64 {
        match &self.kind {
            CoefficientKind::PiecewiseConstant(table) | CoefficientKind::Tabulated { table, .. } => table.first().map_or(0.0, |b| b.t),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Exponential rate of convergence to the limit; `None` when constant.
    pub fn own_decay(&self) -> Result<Option<f64>> {
        match &self.kind {
            CoefficientKind::Constant(_) => Ok(None),
            CoefficientKind::ExpApproach { rate, .. } | CoefficientKind::ExpPerturbed { rate, .. } => Ok(Some(*rate)),
            _ => Err(Error::UnknownDecay { index: self.index }),
        }
    }
}

/// Slowest decay rate across the models, `+∞` when every model is constant.
pub fn decay_rate(models: &[CoefficientModel]) -> Result<f64> {
    let mut slowest = f64::INFINITY;
    for m in models {
        if let Some(r) = m.own_decay()? {
            slowest = slowest.min(r);
        }
    }
    Ok(slowest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{c64, ln, re};

    fn bp(t: f64, v: f64) -> Breakpoint {
        Breakpoint { t, value: re(v) }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(CoefficientModel::constant(1, re(3.0)).eval(7.2).unwrap(), re(3.0));
        let a = CoefficientModel::exp_approach(1, re(2.0), 1.0, 0.0).unwrap();
        assert!((a.eval(ln(2.0)).unwrap() - re(1.0)).norm() < 1e-15);
        let p = CoefficientModel::exp_perturbed(1, re(-1.0), re(0.5), 2.0).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), re(-0.5));
    }

    #[test]
    fn limits() {
        let p = CoefficientModel::exp_perturbed(1, re(-1.0), re(0.5), 2.0).unwrap();
        assert_eq!(p.limit().unwrap(), re(-1.0));
        assert_eq!(CoefficientModel::constant(1, re(3.0)).limit().unwrap(), re(3.0));
        let a = CoefficientModel::exp_approach(1, re(2.0), 1.0, 5.0).unwrap();
        assert_eq!(a.limit().unwrap(), re(2.0));
        let t = CoefficientModel::tabulated(2, alloc::vec![bp(0.0, 1.0)], None).unwrap();
        assert_eq!(t.limit().unwrap_err(), Error::NoLimit { index: 2 });
    }

    #[test]
    fn errors() {
        let c = CoefficientModel::constant(0, re(1.0));
        assert_eq!(c.eval(-1.0).unwrap_err(), Error::NegativeTime(-1.0));
        assert_eq!(CoefficientModel::tabulated(1, Vec::new(), None).unwrap_err(), Error::EmptyTable);
        let t = CoefficientModel::tabulated(1, alloc::vec![bp(1.0, 1.0)], None).unwrap();
        assert!(matches!(t.eval(0.5), Err(Error::OutsideTable { .. })));
    }

    #[test]
    fn step_lookup_and_left_limit() {
        let m = CoefficientModel::piecewise(1, alloc::vec![bp(0.0, 1.0), bp(2.0, 5.0), bp(3.0, -1.0)]).unwrap();
        assert_eq!(m.eval(1.999).unwrap(), re(1.0));
        assert_eq!(m.eval(2.0).unwrap(), re(5.0));
        assert_eq!(m.eval_left_limit(2.0).unwrap(), re(1.0));
        assert_eq!(m.eval_left_limit(0.0).unwrap(), re(1.0));
        assert_eq!(m.eval(100.0).unwrap(), re(-1.0));
        assert_eq!(m.limit().unwrap(), re(-1.0));
        assert_eq!(m.breakpoints(), alloc::vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn decay_rates() {
        let models = [
            CoefficientModel::constant(0, re(1.0)),
            CoefficientModel::exp_perturbed(1, re(0.0), re(1.0), 2.0).unwrap(),
            CoefficientModel::exp_approach(2, re(1.0), 0.5, 0.0).unwrap(),
        ];
        assert_eq!(decay_rate(&models).unwrap(), 0.5);
        assert_eq!(
            decay_rate(&[CoefficientModel::constant(0, re(1.0)), CoefficientModel::constant(1, re(-3.0))]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(decay_rate(&[CoefficientModel::exp_perturbed(1, re(0.0), re(1.0), 1.5).unwrap()]).unwrap(), 1.5);
        let step = CoefficientModel::piecewise(3, alloc::vec![bp(0.0, 1.0)]).unwrap();
        assert_eq!(decay_rate(&[step]).unwrap_err(), Error::UnknownDecay { index: 3 });
    }

    #[test]
    fn complex_values_supported() {
        let m = CoefficientModel::exp_perturbed(1, c64(1.0, 1.0), c64(0.0, -2.0), 1.0).unwrap();
        assert!((m.eval(0.0).unwrap() - c64(1.0, -1.0)).norm() < 1e-15);
    }
}
