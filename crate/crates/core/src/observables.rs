//! Particle energy ΔE = ⟨H_p⟩ - ω₀/2 and kinetic energy ΔT = ⟨mv²/2⟩ - ω₀/4
//! after the quench, their late-time limits, and batched traces.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::correlators::{EpsilonPolicy, TwoPointEngine};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{relaxation_time, SpectralData};

/// Absolute tolerance, in units of ω₀, on ΔE(0) and ΔT(0).
pub const INITIAL_ENERGY_TOL: f64 = 1e-6;
/// Absolute tolerance, in units of ω₀, on ΔE(T) - ΔE_asy once T ≥ 10 τ_relax.
pub const RELAXED_ENERGY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub delta_t: Vec<f64>,
    pub x_var: Vec<f64>,
    pub p_var: Vec<f64>,
    pub uncertainty: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPoint {
    pub delta_e: f64,
    pub delta_t: f64,
    pub x_var: f64,
    pub p_var: f64,
}

pub fn energy_point(eng: &TwoPointEngine, t: f64) -> Result<EnergyPoint> {
    let p = eng.params();
    let w0 = p.omega0();
    let m = p.mass_m();
    let (x, v) = eng.equal_time_dimless(t)?;
    Ok(EnergyPoint {
        delta_e: 0.5 * w0 * (v + x) - 0.5 * w0,
        delta_t: 0.5 * w0 * v - 0.25 * w0,
        x_var: x / (m * w0),
        p_var: v * m * w0,
    })
}

pub fn delta_e(p: &ModelParams, s: &SpectralData, t: f64, eps: EpsilonPolicy) -> Result<f64> {
    Ok(energy_point(&TwoPointEngine::new(p, s, eps)?, t)?.delta_e)
}

pub fn delta_t(p: &ModelParams, s: &SpectralData, t: f64, eps: EpsilonPolicy) -> Result<f64> {
    Ok(energy_point(&TwoPointEngine::new(p, s, eps)?, t)?.delta_t)
}

fn log_moment(s: &SpectralData, weight: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    s.roots()
        .iter()
        .zip(s.residues())
        .map(|(e, r)| {
            // Re(-iη) = Im η > 0 keeps the logarithm off its cut
            r * weight(*e) * (-i * e).ln()
        })
        .sum::<Complex64>()
        * (-i / PI)
}

fn real_energy(z: Complex64, w0: f64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-10 * w0 {
        return Err(Error::Consistency(format!(
            "{what} has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// (ω₀/2)[(-i/π) Σ_j R_j (1+η_j²) ln(-iη_j) - 1].
pub fn delta_e_asy(p: &ModelParams, s: &SpectralData) -> Result<f64> {
    let w0 = p.omega0();
    let m = log_moment(s, |e| 1.0 + e * e);
    real_energy(0.5 * w0 * (m - 1.0), w0, "asymptotic energy change")
}

/// (ω₀/2)[(-i/π) Σ_j R_j η_j² ln(-iη_j) - 1/2].
pub fn delta_t_asy(p: &ModelParams, s: &SpectralData) -> Result<f64> {
    let w0 = p.omega0();
    let m = log_moment(s, |e| e * e);
    real_energy(0.5 * w0 * (m - 0.5), w0, "asymptotic kinetic energy change")
}

pub fn energy_trace(
    p: &ModelParams,
    s: &SpectralData,
    times: &[f64],
    eps: EpsilonPolicy,
) -> Result<EnergyTrace> {
    if times.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain(
            "time grid must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly ascending".into()));
    }
    let eng = TwoPointEngine::new(p, s, eps)?;
    let points: Vec<EnergyPoint> = times
        .par_iter()
        .map(|&t| energy_point(&eng, t))
        .collect::<Result<_>>()?;

    let w0 = p.omega0();
    let mut trace = EnergyTrace {
        times: times.to_vec(),
        delta_e: Vec::with_capacity(points.len()),
        delta_t: Vec::with_capacity(points.len()),
        x_var: Vec::with_capacity(points.len()),
        p_var: Vec::with_capacity(points.len()),
        uncertainty: Vec::with_capacity(points.len()),
    };
    for (t, pt) in times.iter().zip(&points) {
        let u = pt.x_var * pt.p_var;
        if u < 0.25 - 1e-12 {
            return Err(Error::Consistency(format!(
                "uncertainty product {u} below 1/4 at t = {t}"
            )));
        }
        trace.delta_e.push(pt.delta_e);
        trace.delta_t.push(pt.delta_t);
        trace.x_var.push(pt.x_var);
        trace.p_var.push(pt.p_var);
        trace.uncertainty.push(u);
    }
    if times[0] == 0.0
        && (trace.delta_e[0].abs() > INITIAL_ENERGY_TOL * w0
            || trace.delta_t[0].abs() > INITIAL_ENERGY_TOL * w0)
    {
        return Err(Error::Consistency(format!(
            "energy changes at t = 0 are ({}, {}), expected 0",
            trace.delta_e[0], trace.delta_t[0]
        )));
    }
    let t_end = *times.last().unwrap_or(&0.0);
    if t_end >= 10.0 * relaxation_time(s, p) {
        let asy = delta_e_asy(p, s)?;
        let last = *trace.delta_e.last().unwrap_or(&0.0);
        if (last - asy).abs() > RELAXED_ENERGY_TOL * w0 {
            return Err(Error::Consistency(format!(
                "energy change {last} at t = {t_end} has not relaxed to {asy}"
            )));
        }
    }
    Ok(trace)
}

/// Uniform grid of n points on [0, t_max] (n = 1 gives {0}).
pub fn uniform_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("n_points must be >= 1".into()));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be > 0, got {t_max}")));
    }
    Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::find_roots;

    fn setup(sigma: f64, eta_r: f64, eta_0: f64) -> (ModelParams, SpectralData) {
        let p = ModelParams::natural(sigma, eta_r, eta_0).unwrap();
        let s = find_roots(&p).unwrap();
        (p, s)
    }

    #[test]
    fn zero_at_quench() {
        let (p, s) = setup(1.0, 1.0, 0.5);
        let e = EpsilonPolicy::default();
        assert!(delta_e(&p, &s, 0.0, e).unwrap().abs() < 1e-12);
        assert!(delta_t(&p, &s, 0.0, e).unwrap().abs() < 1e-12);
        let tr = energy_trace(&p, &s, &[0.0], e).unwrap();
        assert_eq!(tr.times.len(), 1);
        assert!(tr.delta_e[0].abs() < 1e-12 && tr.delta_t[0].abs() < 1e-12);
    }

    #[test]
    fn relaxes_to_asymptote() {
        let (p, s) = setup(1.0, 1.0, 0.5);
        let t = 10.0 * relaxation_time(&s, &p);
        let de = delta_e(&p, &s, t, EpsilonPolicy::default()).unwrap();
        let asy = delta_e_asy(&p, &s).unwrap();
        assert!((de - asy).abs() < 1e-3);
        assert!(asy > 0.0);
    }

    #[test]
    fn potential_energy_decomposition() {
        let (p, s) = setup(1.3, 0.4, 0.7);
        let eng = TwoPointEngine::new(&p, &s, EpsilonPolicy::default()).unwrap();
        let x0 = energy_point(&eng, 0.0).unwrap().x_var;
        for t in [0.5, 2.0, 7.0] {
            let pt = energy_point(&eng, t).unwrap();
            let lhs = pt.delta_e - pt.delta_t;
            let rhs = 0.5 * (pt.x_var - x0);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-3));
        }
    }

    #[test]
    fn grid_validation() {
        let (p, s) = setup(1.0, 1.0, 0.5);
        let e = EpsilonPolicy::default();
        assert!(energy_trace(&p, &s, &[1.0, 0.5], e).is_err());
        assert!(energy_trace(&p, &s, &[-1.0], e).is_err());
        assert_eq!(uniform_grid(5.0, 1).unwrap(), vec![0.0]);
        assert_eq!(uniform_grid(4.0, 3).unwrap(), vec![0.0, 2.0, 4.0]);
    }
}
