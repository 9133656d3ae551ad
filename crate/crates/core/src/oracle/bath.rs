//! A finite reservoir of N oscillators standing in for the continuum R(t, ν).
//!
//! The mode ν_k carries mass μ_k = μ/w_k and coupling β_k² = β²(ν_k), where
//! w_k are the quadrature weights, so that Σ_k β_k²/μ_k → ∫ β²/μ dν. With
//! Q_k = μ_kṘ_k + β_k x the Hamiltonian is
//!
//!   H = p²/2m + mω₀²x²/2 + Σ_k [(Q_k - β_k x)²/2μ_k + μ_kν_k²R_k²/2].
//!
//! In the variables y₀ = √m x, y_k = Q_k/(√μ_k ν_k) with conjugates
//! π₀ = p/√m, π_k = -√μ_k ν_k R_k this is Σπ²/2 + yᵀKy/2 with an arrowhead
//! K. Diagonalising K once gives every later covariance in closed form, so
//! the run has no time-step error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{coupling_beta_sq, ModelParams};

/// Largest mode count for which the full phase-space covariance is built
/// on request.
const DENSE_LIMIT: usize = 400;
/// Tolerated asymmetry of a propagated covariance block.
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coupling {
    Lorentzian,
    /// β ≡ 0: the particle and the reservoir never interact.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathGrid {
    pub nu: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BathGrid {
    /// Midpoint rule on [ν_max/(10n), ν_max].
    pub fn midpoint(n: usize, nu_max: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 modes, got {n}"
            )));
        }
        if !(nu_max.is_finite() && nu_max > 0.0) {
            return Err(Error::InvalidParams(format!(
                "nu_max must be > 0, got {nu_max}"
            )));
        }
        let nu_min = nu_max / (10.0 * n as f64);
        let h = (nu_max - nu_min) / n as f64;
        Ok(Self {
            nu: (0..n).map(|k| nu_min + (k as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
        })
    }

    pub fn spacing(&self) -> f64 {
        self.weights[0]
    }

    /// 2π/Δν: beyond this the finite reservoir echoes back.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing()
    }
}

#[derive(Debug)]
struct NormalModes {
    /// columns are eigenvectors of K
    v: DMatrix<f64>,
    freq: DVector<f64>,
    /// y₀ in normal coordinates (row 0 of v)
    v0: DVector<f64>,
    /// Σ_k ν_k² y_k² in normal coordinates
    w: DMatrix<f64>,
    /// Σ_k ν_kβ_k y_k/√(mμ_k) in normal coordinates
    u: DVector<f64>,
    /// Σ_k β_k²/(mμ_k)
    shift: f64,
    /// √μ_k ν_k
    scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BathState {
    n_modes: usize,
    nu_max: f64,
    grid: BathGrid,
    time: f64,
    params: ModelParams,
    coupling: Coupling,
    modes: Arc<NormalModes>,
    // symmetrised second moments in normal coordinates
    syy: DMatrix<f64>,
    spp: DMatrix<f64>,
    syp: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BathSample {
    pub t: f64,
    pub x_var: f64,
    pub p_var: f64,
    pub xp_sym: f64,
    pub h_p: f64,
    pub h_r: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct BathRun {
    pub samples: Vec<BathSample>,
    pub state: BathState,
}

impl BathRun {
    /// Largest |H(t) - H(t₀)| over the run.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].total;
        self.samples
            .iter()
            .map(|s| (s.total - e0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn bath_init(p: &ModelParams, n_modes: usize, nu_max: f64) -> Result<BathState> {
    bath_init_with(p, n_modes, nu_max, Coupling::Lorentzian)
}

/// Ground state of the uncoupled particle and reservoir, ready to evolve
/// under the coupled Hamiltonian.
pub fn bath_init_with(
    p: &ModelParams,
    n_modes: usize,
    nu_max: f64,
    coupling: Coupling,
) -> Result<BathState> {
    let w0 = p.omega0();
    let floor = 3.0
        * w0
        * [1.0, p.eta_r() + 5.0 * p.eta_0(), p.sigma()]
            .into_iter()
            .fold(0.0, f64::max);
    if !(nu_max > floor) {
        return Err(Error::InvalidParams(format!(
            "nu_max = {nu_max} does not resolve the coupling profile (need > {floor})"
        )));
    }
    let grid = BathGrid::midpoint(n_modes, nu_max)?;
    let n = n_modes;
    let m = p.mass_m();
    let mu_k: Vec<f64> = grid.weights.iter().map(|w| p.mu() / w).collect();
    let beta: Vec<f64> = grid
        .nu
        .iter()
        .map(|&nu| match coupling {
            Coupling::Lorentzian => coupling_beta_sq(p, nu).sqrt(),
            Coupling::Off => 0.0,
        })
        .collect();

    let mut k = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut shift = 0.0;
    let mut b = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        let nu = grid.nu[i];
        shift += beta[i] * beta[i] / (m * mu_k[i]);
        k[(i + 1, i + 1)] = nu * nu;
        let off = -beta[i] * nu / (m * mu_k[i]).sqrt();
        k[(0, i + 1)] = off;
        k[(i + 1, 0)] = off;
        b[i + 1] = -off;
    }
    k[(0, 0)] = w0 * w0 + shift;

    let eig = k.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::Degenerate(format!(
            "reservoir has a non-positive mode ({min:e})"
        )));
    }
    let v = eig.eigenvectors;
    let freq = eig.eigenvalues.map(f64::sqrt);
    let v0 = v.row(0).transpose();

    let mut nu_sq = DVector::<f64>::zeros(n + 1);
    let mut dy = DVector::<f64>::zeros(n + 1);
    let mut dp = DVector::<f64>::zeros(n + 1);
    dy[0] = 0.5 / w0;
    dp[0] = 0.5 * w0;
    for i in 0..n {
        let nu = grid.nu[i];
        nu_sq[i + 1] = nu * nu;
        dy[i + 1] = 0.5 / nu;
        dp[i + 1] = 0.5 * nu;
    }
    let congruence = |d: &DVector<f64>| {
        let mut scaled = v.clone();
        for (mut row, di) in scaled.row_iter_mut().zip(d.iter()) {
            row *= *di;
        }
        v.tr_mul(&scaled)
    };
    let syy = congruence(&dy);
    let spp = congruence(&dp);
    let w = congruence(&nu_sq);
    let u = v.tr_mul(&b);

    let modes = NormalModes {
        scale: (0..n).map(|i| mu_k[i].sqrt() * grid.nu[i]).collect(),
        v,
        freq,
        v0,
        w,
        u,
        shift,
    };
    Ok(BathState {
        n_modes,
        nu_max,
        grid,
        time: 0.0,
        params: *p,
        coupling,
        modes: Arc::new(modes),
        syy,
        spp,
        syp: DMatrix::zeros(n + 1, n + 1),
    })
}

/// Per-mode rotation by the phase Ω_a·dt.
struct Rotation {
    c: Vec<f64>,
    s: Vec<f64>,
    f: Vec<f64>,
}

impl Rotation {
    fn new(freq: &DVector<f64>, dt: f64) -> Self {
        Self {
            c: freq.iter().map(|w| (w * dt).cos()).collect(),
            s: freq.iter().map(|w| (w * dt).sin()).collect(),
            f: freq.iter().copied().collect(),
        }
    }

    /// (⟨YY⟩, ⟨PP⟩, ⟨YP⟩) entry (a, b) after the rotation.
    #[inline]
    fn entry(&self, a: usize, b: usize, yy: f64, pp: f64, yp: f64, py: f64) -> (f64, f64, f64) {
        let (ca, sa, wa) = (self.c[a], self.s[a], self.f[a]);
        let (cb, sb, wb) = (self.c[b], self.s[b], self.f[b]);
        let my = ca * cb * yy + ca * sb / wb * yp + sa / wa * cb * py + sa * sb / (wa * wb) * pp;
        let mp = wa * wb * sa * sb * yy - wa * sa * cb * py - ca * wb * sb * yp + ca * cb * pp;
        let mx = -ca * wb * sb * yy + ca * cb * yp - sa * sb * wb / wa * py + sa / wa * cb * pp;
        (my, mp, mx)
    }
}

impl BathState {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn nu_max(&self) -> f64 {
        self.nu_max
    }
    pub fn grid(&self) -> &BathGrid {
        &self.grid
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    fn sample(&self, t: f64) -> BathSample {
        let md = &*self.modes;
        let rot = Rotation::new(&md.freq, t - self.time);
        let n = self.n_modes + 1;
        let v0 = &md.v0;
        // (y00, p00, yp00, tr(W Myy), tr(Mpp), uᵀ Myy v0)
        let sums = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut acc = [0.0; 6];
                for b in 0..n {
                    let (my, mp, mx) = rot.entry(
                        a,
                        b,
                        self.syy[(a, b)],
                        self.spp[(a, b)],
                        self.syp[(a, b)],
                        self.syp[(b, a)],
                    );
                    let vv = v0[a] * v0[b];
                    acc[0] += vv * my;
                    acc[1] += vv * mp;
                    acc[2] += vv * mx;
                    acc[3] += md.w[(a, b)] * my;
                    acc[5] += md.u[a] * my * v0[b];
                    if a == b {
                        acc[4] += mp;
                    }
                }
                acc
            })
            .reduce(|| [0.0; 6], |x, y| std::array::from_fn(|i| x[i] + y[i]));
        let [y00, p00, yp00, tr_w, tr_p, cross] = sums;
        let p = &self.params;
        let w0 = p.omega0();
        let h_p = 0.5 * p00 + 0.5 * w0 * w0 * y00;
        let h_r = 0.5 * tr_w + 0.5 * (tr_p - p00) - cross + 0.5 * md.shift * y00;
        BathSample {
            t,
            x_var: y00 / p.mass_m(),
            p_var: p00 * p.mass_m(),
            xp_sym: yp00,
            h_p,
            h_r,
            total: h_p + h_r,
        }
    }

    fn advance(&self, t: f64) -> Result<BathState> {
        let n = self.n_modes + 1;
        let rot = Rotation::new(&self.modes.freq, t - self.time);
        let mut syy = DMatrix::zeros(n, n);
        let mut spp = DMatrix::zeros(n, n);
        let mut syp = DMatrix::zeros(n, n);
        for b in 0..n {
            for a in 0..n {
                let (my, mp, mx) = rot.entry(
                    a,
                    b,
                    self.syy[(a, b)],
                    self.spp[(a, b)],
                    self.syp[(a, b)],
                    self.syp[(b, a)],
                );
                syy[(a, b)] = my;
                spp[(a, b)] = mp;
                syp[(a, b)] = mx;
            }
        }
        for m in [&syy, &spp] {
            let scale = m.amax().max(1e-300);
            let asym = (m - m.transpose()).amax();
            if asym > SYMMETRY_TOL * scale {
                return Err(Error::Integration(format!(
                    "covariance lost symmetry ({asym:e}) at t = {t}"
                )));
            }
        }
        Ok(BathState {
            time: t,
            syy,
            spp,
            syp,
            ..self.clone_shallow()
        })
    }

    fn clone_shallow(&self) -> BathState {
        BathState {
            n_modes: self.n_modes,
            nu_max: self.nu_max,
            grid: self.grid.clone(),
            time: self.time,
            params: self.params,
            coupling: self.coupling,
            modes: Arc::clone(&self.modes),
            syy: DMatrix::zeros(0, 0),
            spp: DMatrix::zeros(0, 0),
            syp: DMatrix::zeros(0, 0),
        }
    }

    /// Energies and particle moments at the current time.
    pub fn observe(&self) -> BathSample {
        self.sample(self.time)
    }

    /// Symmetrised covariance over (x, p, R_1..R_N, Q_1..Q_N).
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let n = self.n_modes;
        if n > DENSE_LIMIT {
            return Err(Error::InvalidParams(format!(
                "dense covariance only built for n_modes <= {DENSE_LIMIT}"
            )));
        }
        let v = &self.modes.v;
        let cyy = v * &self.syy * v.transpose();
        let cpp = v * &self.spp * v.transpose();
        let cyp = v * &self.syp * v.transpose();
        let m = self.params.mass_m();
        // phase-space coordinate i is coef·(y or π)[slot]
        let map = |i: usize| -> (bool, usize, f64) {
            if i == 0 {
                (true, 0, 1.0 / m.sqrt())
            } else if i == 1 {
                (false, 0, m.sqrt())
            } else if i < n + 2 {
                let k = i - 2;
                (false, k + 1, -1.0 / self.modes.scale[k])
            } else {
                let k = i - n - 2;
                (true, k + 1, self.modes.scale[k])
            }
        };
        let dim = 2 * (n + 1);
        let mut out = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (yi, si, ci) = map(i);
            for j in 0..dim {
                let (yj, sj, cj) = map(j);
                let val = match (yi, yj) {
                    (true, true) => cyy[(si, sj)],
                    (false, false) => cpp[(si, sj)],
                    (true, false) => cyp[(si, sj)],
                    (false, true) => cyp[(sj, si)],
                };
                out[(i, j)] = ci * cj * val;
            }
        }
        Ok(out)
    }

    /// Smallest eigenvalue of covariance + (i/2)Ω, Ω the symplectic form.
    /// A physical Gaussian state has it non-negative.
    pub fn physicality_margin(&self) -> Result<f64> {
        let cov = self.covariance()?;
        let n = self.n_modes;
        let dim = cov.nrows();
        let mut h = cov.map(|x| Complex64::new(x, 0.0));
        let mut pair = |a: usize, b: usize| {
            h[(a, b)] += Complex64::new(0.0, 0.5);
            h[(b, a)] -= Complex64::new(0.0, 0.5);
        };
        pair(0, 1);
        for k in 0..n {
            pair(2 + k, n + 2 + k);
        }
        debug_assert_eq!(dim, 2 * (n + 1));
        Ok(h.symmetric_eigenvalues().min())
    }
}

/// Evolves from the state's time to t_final, sampling every dt_step.
/// Evolution is exact in each normal mode; dt_step sets only the output
/// cadence.
pub fn bath_evolve(
    state: &BathState,
    p: &ModelParams,
    t_final: f64,
    dt_step: f64,
) -> Result<BathRun> {
    if *p != state.params {
        return Err(Error::InvalidParams(
            "bath state was prepared for different model parameters".into(),
        ));
    }
    if !(t_final.is_finite() && t_final > state.time) {
        return Err(Error::Domain(format!(
            "t_final must exceed the current time {}, got {t_final}",
            state.time
        )));
    }
    if !(dt_step.is_finite() && dt_step > 0.0) {
        return Err(Error::Domain(format!("dt_step must be > 0, got {dt_step}")));
    }
    let t_rec = state.grid.recurrence_time();
    if t_final >= t_rec {
        return Err(Error::Domain(format!(
            "t_final = {t_final} reaches the recurrence time {t_rec:.4} of this grid"
        )));
    }
    let steps = ((t_final - state.time) / dt_step - 1e-9).ceil() as usize;
    let mut times: Vec<f64> = (0..steps)
        .map(|k| state.time + k as f64 * dt_step)
        .collect();
    times.push(t_final);
    let samples: Vec<BathSample> = times.iter().map(|&t| state.sample(t)).collect();
    if samples
        .iter()
        .any(|s| !(s.x_var >= 0.0 && s.p_var >= 0.0 && s.total.is_finite()))
    {
        return Err(Error::Integration(
            "reservoir moments became unphysical".into(),
        ));
    }
    Ok(BathRun {
        samples,
        state: state.advance(t_final)?,
    })
}
