//! Independent checks of the closed forms: direct quadrature of the spectral
//! integrals and a discretised reservoir evolved mode by mode.

mod bath;
mod integrals;

pub use bath::{
    bath_evolve, bath_init, bath_init_with, BathGrid, BathRun, BathSample, BathState, Coupling,
};
pub use integrals::{
    a_func, a_func_deriv, b_func, b_func_contour, commutator_integral, quad_corr_qp,
    quad_corr_tr_general, quad_zeta, quad_zeta_windowed, PV_WINDOW,
};

use crate::error::{Error, Result};
use crate::quadrature::QuadOptions;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    cutoff: f64,
    rel_tol: f64,
    abs_tol: f64,
    tail_correction: bool,
}

impl QuadratureSpec {
    /// `cutoff` is the largest dimensionless frequency ω/ω₀ integrated
    /// numerically; beyond it the asymptotic form of ζ takes over.
    pub fn new(cutoff: f64, rel_tol: f64, abs_tol: f64, tail_correction: bool) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 10.0) {
            return Err(Error::InvalidParams(format!(
                "cutoff must exceed 10, got {cutoff}"
            )));
        }
        for (name, v) in [("rel_tol", rel_tol), ("abs_tol", abs_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self {
            cutoff,
            rel_tol,
            abs_tol,
            tail_correction,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }
    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }
    pub fn tail_correction(&self) -> bool {
        self.tail_correction
    }

    pub fn with_cutoff(&self, cutoff: f64) -> Result<Self> {
        Self::new(cutoff, self.rel_tol, self.abs_tol, self.tail_correction)
    }

    pub fn with_tail_correction(&self, on: bool) -> Self {
        Self {
            tail_correction: on,
            ..*self
        }
    }

    pub(crate) fn options(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: 200_000,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            cutoff: 200.0,
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            tail_correction: true,
        }
    }
}
