//! Companion realization `ż = A(t)z` of the scalar equation, and the
//! [`LinearSystem`] abstraction the integrators consume.

use alloc::vec::Vec;

use crate::coefficients::{CoefficientKind, CoefficientModel};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::math::Complex64;

/// A matrix function `t ↦ A(t)` on `[0, ∞)`.
pub trait LinearSystem {
    fn dim(&self) -> usize;

    fn matrix(&self, t: f64) -> Result<CMatrix>;

    /// `lim_{s↑t} A(s)`; used by integrator stages that land on a breakpoint.
    fn matrix_left(&self, t: f64) -> Result<CMatrix> {
        self.matrix(t)
    }

    /// Sorted times where `A` may jump; integrators never step across them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Adapter turning a closure into a [`LinearSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64) -> CMatrix,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnSystem { dim, f }
    }
}

impl<F> LinearSystem for FnSystem<F>
where
    F: Fn(f64) -> CMatrix,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix(&self, t: f64) -> Result<CMatrix> {
        let m = (self.f)(t);
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.rows(),
            });
        }
        Ok(m)
    }
}

fn companion_from_values(alpha: &[Complex64]) -> CMatrix {
    // alpha = (α_1, …, α_n)
    let n = alpha.len();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i, i + 1)] = Complex64::new(1.0, 0.0);
    }
    for j in 0..n {
        m[(n - 1, j)] = -alpha[n - 1 - j];
    }
    m
}

fn ordered(coeffs: &[CoefficientModel]) -> Result<Vec<&CoefficientModel>> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidSystem("order must be at least 1"));
    }
    let mut slots: Vec<Option<&CoefficientModel>> = alloc::vec![None; coeffs.len()];
    for c in coeffs {
        match slots.get_mut(c.index) {
            Some(slot @ None) => *slot = Some(c),
            Some(Some(_)) => return Err(Error::InvalidSystem("duplicate coefficient index")),
            None => return Err(Error::InvalidSystem("coefficient index out of range")),
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("every slot filled")).collect())
}

/// Companion matrix at time `t`: identity superdiagonal, last row `(−α_n, …, −α_1)`.
pub fn build_companion(coeffs: &[CoefficientModel], t: f64) -> Result<CMatrix> {
    let ordered = ordered(coeffs)?;
    if ordered[0].eval(t)? != Complex64::new(1.0, 0.0) {
        return Err(Error::NotMonic);
    }
    let alpha = ordered[1..].iter().map(|c| c.eval(t)).collect::<Result<Vec<_>>>()?;
    Ok(companion_from_values(&alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompanionSystem {
    coeffs: Vec<CoefficientModel>,
    breakpoints: Vec<f64>,
    limit_matrix: Option<CMatrix>,
}

impl CompanionSystem {
    /// Validates indices `0..=n`, monicity and that every model is defined from `t = 0`.
    pub fn new(coeffs: Vec<CoefficientModel>) -> Result<Self> {
        let sorted: Vec<CoefficientModel> = ordered(&coeffs)?.into_iter().cloned().collect();
        if sorted[0].kind != CoefficientKind::Constant(Complex64::new(1.0, 0.0)) {
            return Err(Error::NotMonic);
        }
        if sorted.iter().any(|c| c.start_time() > 0.0) {
            return Err(Error::InvalidSystem("tabulated coefficients must start at t = 0"));
        }
        let mut breakpoints: Vec<f64> = sorted.iter().flat_map(|c| c.breakpoints()).filter(|&t| t > 0.0).collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        breakpoints.dedup();
        let limits: Result<Vec<Complex64>> = sorted[1..].iter().map(|c| c.limit()).collect();
        let limit_matrix = limits.ok().map(|l| companion_from_values(&l));
        Ok(CompanionSystem {
            coeffs: sorted,
            breakpoints,
            limit_matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient models ordered by index.
    pub fn coefficients(&self) -> &[CoefficientModel] {
        &self.coeffs
    }

    pub fn build(&self, t: f64) -> Result<CMatrix> {
        let alpha = self.coeffs[1..].iter().map(|c| c.eval(t)).collect::<Result<Vec<_>>>()?;
        Ok(companion_from_values(&alpha))
    }

    /// `A*`, the companion matrix at the coefficient limits.
    pub fn limiting_matrix(&self) -> Result<CMatrix> {
        match &self.limit_matrix {
            Some(m) => Ok(m.clone()),
            None => {
                for c in &self.coeffs {
                    c.limit()?;
                }
                Err(Error::InvalidSystem("coefficient limits unavailable"))
            }
        }
    }

    /// `true` when every coefficient is time-invariant.
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| matches!(c.kind, CoefficientKind::Constant(_)))
    }

    /// The constant system built from the coefficient limits.
    pub fn limiting_system(&self) -> Result<CompanionSystem> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.limit().map(|l| CoefficientModel::constant(c.index, l)))
            .collect::<Result<Vec<_>>>()?;
        CompanionSystem::new(coeffs)
    }
}

impl LinearSystem for CompanionSystem {
    fn dim(&self) -> usize {
        self.order()
    }

    fn matrix(&self, t: f64) -> Result<CMatrix> {
        self.build(t)
    }

    fn matrix_left(&self, t: f64) -> Result<CMatrix> {
        let alpha = self.coeffs[1..].iter().map(|c| c.eval_left_limit(t)).collect::<Result<Vec<_>>>()?;
        Ok(companion_from_values(&alpha))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Constant-coefficient system `ż = Az`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSystem(pub CMatrix);

impl LinearSystem for ConstantSystem {
    fn dim(&self) -> usize {
        self.0.rows()
    }

    fn matrix(&self, _t: f64) -> Result<CMatrix> {
        Ok(self.0.clone())
    }
}
