#![no_std]
//! Sampled discretization, limiting spectra and residue-based asymptotics for
//! scalar linear ODEs `Dⁿx + α₁(t)Dⁿ⁻¹x + … + αₙ(t)x = 0` whose coefficients
//! converge as `t → ∞`.

extern crate alloc;

pub mod bounds;
pub mod coefficients;
pub mod discretize;
pub mod companion;
pub mod error;
pub mod linalg;
pub mod math;
pub mod poly;
pub mod propagate;
pub mod quadrature;
pub mod residues;
pub mod spectrum;

pub use error::{Error, Result};
