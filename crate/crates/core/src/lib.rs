//! Closed-form correlators and energy observables for a harmonic particle
//! quenched into contact with a two-Lorentzian oscillator reservoir, with
//! quadrature and finite-reservoir oracles to check them.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod cli;
pub mod config;
pub mod correlators;
pub mod error;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod quadrature;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
pub use model::ModelParams;
pub use spectral::SpectralData;
