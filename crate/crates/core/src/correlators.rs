//! Closed-form two-point functions ⟨x(t)x(t′)⟩ = qp + tr after the quench,
//! their time derivatives, and equal-time variances.
//!
//! Internally times are τ = ω₀t and the position correlator is measured in
//! units of 1/(mω₀).

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Shape};
use crate::specfun::{cos_integral, g_aux, sin_integral};
use crate::spectral::SpectralData;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type MatPair = (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>);

/// Smallest |denominator| accepted in G_kj.
pub const G_DENOM_TOL: f64 = 1e-13;
/// Relative size of an imaginary part tolerated when a real observable is
/// extracted.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EqualTimeMode {
    LimitFormula,
    EpsilonExtrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonPolicy {
    epsilon: f64,
    mode: EqualTimeMode,
}

impl EpsilonPolicy {
    pub fn new(epsilon: f64, mode: EqualTimeMode) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be finite and > 0, got {epsilon}"
            )));
        }
        Ok(Self { epsilon, mode })
    }

    pub fn limit() -> Self {
        Self {
            epsilon: 1e-8,
            mode: EqualTimeMode::LimitFormula,
        }
    }

    pub fn extrapolation() -> Self {
        Self {
            epsilon: 1e-8,
            mode: EqualTimeMode::EpsilonExtrapolation,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> EqualTimeMode {
        self.mode
    }
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self::limit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorPoint {
    pub t: f64,
    pub t_prime: f64,
    pub qp_value: Complex64,
    pub tr_value: Complex64,
    pub total: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Variances {
    pub x_var: f64,
    pub p_var: f64,
    pub xp_sym: f64,
}

/// b(z) = sin z Si(z) + cos z Ci(z) - (π/2) sin z, written through g so that
/// large |Im z| does not cancel.
pub fn stationary_kernel(z: Complex64) -> Result<Complex64> {
    if z.im > 0.0 {
        Ok(0.5 * (g_aux(z)? + g_aux(-z)?))
    } else if z.im < 0.0 {
        Ok(0.5 * (g_aux(z)? + g_aux(-z)?) - I * PI * (-I * z).exp())
    } else if z.re > 0.0 {
        let (s, c) = (z.sin(), z.cos());
        Ok(s * sin_integral(z)? + c * cos_integral(z)? - FRAC_PI_2 * s)
    } else {
        Err(Error::Domain(format!(
            "stationary kernel argument {z} lies on the Ci branch cut"
        )))
    }
}

/// b′(z) - 1/z.
fn stationary_kernel_d1(z: Complex64) -> Result<Complex64> {
    if z.im > 0.0 {
        Ok(0.5 * I * (g_aux(z)? - g_aux(-z)?))
    } else if z.im < 0.0 {
        Ok(0.5 * I * (g_aux(z)? - g_aux(-z)?) - PI * (-I * z).exp())
    } else if z.re > 0.0 {
        let (s, c) = (z.sin(), z.cos());
        Ok(c * (sin_integral(z)? - FRAC_PI_2) - s * cos_integral(z)?)
    } else {
        Err(Error::Domain(format!(
            "stationary kernel argument {z} lies on the Ci branch cut"
        )))
    }
}

// Q(α) = C̃_qp, Q′(α), Q″(α) for the stationary part.
#[derive(Debug, Clone, Copy)]
struct QpParts {
    q: Complex64,
    dq: Complex64,
    ddq: Complex64,
}

/// Precomputed per-parameter data for repeated correlator evaluation.
#[derive(Debug, Clone)]
pub struct TwoPointEngine {
    params: ModelParams,
    shape: Shape,
    eta: Vec<Complex64>,
    res: Vec<Complex64>,
    cs: [Complex64; 4],
    eps: EpsilonPolicy,
    f0: Vec<Vec<Complex64>>,
    fp0: Vec<Vec<Complex64>>,
    w: Vec<Vec<Complex64>>,
    qp_equal: QpParts,
}

// g values at one time argument, or their logarithmic α → 0 limits.
struct GTable {
    gc: [Complex64; 4],
    ga: Vec<Complex64>,
    gb: Vec<Complex64>,
}

fn check_den(d: Complex64, what: &str) -> Result<()> {
    if d.norm() < G_DENOM_TOL {
        Err(Error::Degenerate(format!(
            "G_kj denominator {what} = {d:e} below {G_DENOM_TOL:e}"
        )))
    } else {
        Ok(())
    }
}

// G and dG/dα from precomputed X(c) = g(cα), Y(a) = g(-aα), Y(b) = g(-bα).
fn g_pair(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    xc: Complex64,
    ya: Complex64,
    yb: Complex64,
) -> Result<(Complex64, Complex64)> {
    let ba = b - a;
    let ac = a + c;
    let bc = b + c;
    check_den(ba, "eta_j - conj(eta_k)")?;
    check_den(ac, "conj(eta_k) + c")?;
    check_den(bc, "eta_j + c")?;
    let pc = c * xc;
    let pa = a * ya;
    let pb = b * yb;
    let g = (pc + pa) / (ba * ac) - (pc + pb) / (ba * bc);
    let dg = I * (c * pc - a * pa) / (ba * ac) - I * (c * pc - b * pb) / (ba * bc);
    Ok((g, dg))
}

impl TwoPointEngine {
    pub fn new(p: &ModelParams, s: &SpectralData, eps: EpsilonPolicy) -> Result<Self> {
        let active = s.active();
        let eta: Vec<Complex64> = active.iter().map(|&j| s.roots()[j]).collect();
        let res: Vec<Complex64> = active.iter().map(|&j| s.residues()[j]).collect();
        if let Some(bad) = eta.iter().find(|e| !(e.im > 0.0)) {
            return Err(Error::Domain(format!(
                "root {bad} is not in the upper half plane"
            )));
        }
        let sh = p.shape();
        let er = sh.eta_r;
        let e0 = sh.eta_0;
        let cs = [
            Complex64::new(-er, -e0),
            Complex64::new(er, -e0),
            Complex64::new(-er, e0),
            Complex64::new(er, e0),
        ];
        let mut eng = Self {
            params: *p,
            shape: sh,
            eta,
            res,
            cs,
            eps,
            f0: Vec::new(),
            fp0: Vec::new(),
            w: Vec::new(),
            qp_equal: QpParts {
                q: ZERO,
                dq: ZERO,
                ddq: ZERO,
            },
        };
        let tab0 = eng.g_table(0.0)?;
        let (f0, fp0) = eng.f_mats(&tab0)?;
        let sfac = sh.sigma * sh.sigma / PI;
        let n = eng.eta.len();
        let mut w = vec![vec![ZERO; n]; n];
        for k in 0..n {
            for j in 0..n {
                w[k][j] = (eng.eta[k].conj() + 1.0) * (eng.eta[j] + 1.0) - sfac * f0[k][j];
            }
        }
        eng.f0 = f0;
        eng.fp0 = fp0;
        eng.w = w;
        eng.qp_equal = eng.qp_equal_time();
        Ok(eng)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_active(&self) -> usize {
        self.eta.len()
    }

    fn g_table(&self, alpha: f64) -> Result<GTable> {
        let n = self.eta.len();
        let mut gc = [ZERO; 4];
        let mut ga = vec![ZERO; n];
        let mut gb = vec![ZERO; n];
        if alpha == 0.0 {
            for (m, c) in self.cs.iter().enumerate() {
                gc[m] = c.ln();
            }
            for j in 0..n {
                ga[j] = (-self.eta[j].conj()).ln();
                gb[j] = (-self.eta[j]).ln();
            }
        } else {
            for (m, c) in self.cs.iter().enumerate() {
                gc[m] = g_aux(c * alpha)?;
            }
            for j in 0..n {
                ga[j] = g_aux(-self.eta[j].conj() * alpha)?;
                gb[j] = g_aux(-self.eta[j] * alpha)?;
            }
        }
        Ok(GTable { gc, ga, gb })
    }

    // F_kj and F′_kj at the time argument behind `tab`.
    fn f_mats(&self, tab: &GTable) -> Result<MatPair> {
        let n = self.eta.len();
        let mut f = vec![vec![ZERO; n]; n];
        let mut fp = vec![vec![ZERO; n]; n];
        let sign = [1.0, 1.0, -1.0, -1.0];
        for k in 0..n {
            let a = self.eta[k].conj();
            for j in 0..n {
                let b = self.eta[j];
                let mut acc = ZERO;
                let mut dacc = ZERO;
                for m in 0..4 {
                    let (g, dg) = g_pair(a, b, self.cs[m], tab.gc[m], tab.ga[k], tab.gb[j])?;
                    acc += sign[m] * g;
                    dacc += sign[m] * dg;
                }
                f[k][j] = 0.5 * I * acc;
                fp[k][j] = 0.5 * I * dacc;
            }
        }
        Ok((f, fp))
    }

    fn qp_equal_time(&self) -> QpParts {
        let mut s0 = ZERO;
        let mut s2 = ZERO;
        let mut s1 = ZERO;
        for (e, r) in self.eta.iter().zip(&self.res) {
            let l = (-I * e).ln();
            s0 += r * l;
            s2 += r * e * e * l;
            s1 += r * e;
        }
        // Σ R_j η_j b′(z_j) → -(π/2) Σ R_j η_j
        let q1 = -FRAC_PI_2 * s1;
        QpParts {
            q: -I / PI * s0,
            dq: -I / PI * q1,
            ddq: I / PI * s2,
        }
    }

    // Kernel sums at complex Δ with Im(η_j Δ) arbitrary.
    fn qp_sums(&self, delta: Complex64) -> Result<QpParts> {
        let mut s0 = ZERO;
        let mut s1 = ZERO;
        let mut s2 = ZERO;
        for (e, r) in self.eta.iter().zip(&self.res) {
            let z = e * delta;
            let b = stationary_kernel(z)?;
            s0 += r * b;
            s1 += r * e * stationary_kernel_d1(z)?;
            s2 += r * e * e * b;
        }
        Ok(QpParts {
            q: -I / PI * s0,
            dq: -I / PI * s1,
            ddq: I / PI * s2,
        })
    }

    fn qp_parts(&self, alpha: f64) -> Result<QpParts> {
        match self.eps.mode {
            EqualTimeMode::LimitFormula => {
                if alpha == 0.0 {
                    return Ok(self.qp_equal);
                }
                let v = self.qp_sums(Complex64::new(alpha.abs(), 0.0))?;
                if alpha > 0.0 {
                    Ok(v)
                } else {
                    Ok(QpParts {
                        q: v.q.conj(),
                        dq: -v.dq.conj(),
                        ddq: v.ddq.conj(),
                    })
                }
            }
            EqualTimeMode::EpsilonExtrapolation => {
                let e = self.eps.epsilon * self.params.omega0();
                let at = |eps: f64| -> Result<QpParts> {
                    let v = self.qp_sums(Complex64::new(alpha.abs(), -eps))?;
                    Ok(if alpha >= 0.0 {
                        v
                    } else {
                        QpParts {
                            q: v.q.conj(),
                            dq: -v.dq.conj(),
                            ddq: v.ddq.conj(),
                        }
                    })
                };
                let full = at(e)?;
                let half = at(0.5 * e)?;
                Ok(QpParts {
                    q: 2.0 * half.q - full.q,
                    dq: 2.0 * half.dq - full.dq,
                    ddq: 2.0 * half.ddq - full.ddq,
                })
            }
        }
    }

    fn f_at(&self, tau: f64) -> Result<MatPair> {
        if tau == 0.0 {
            return Ok((self.f0.clone(), self.fp0.clone()));
        }
        let tab = self.g_table(tau)?;
        self.f_mats(&tab)
    }

    // Transient part and its ∂_{τ′} and ∂_τ∂_{τ′} derivatives, dimensionless.
    fn transient(&self, tau: f64, taup: f64) -> Result<(Complex64, Complex64, Complex64)> {
        let n = self.eta.len();
        let (ft, fpt) = self.f_at(tau)?;
        let (fs, fps) = if taup == tau {
            (ft.clone(), fpt.clone())
        } else {
            self.f_at(taup)?
        };
        let sfac = self.shape.sigma * self.shape.sigma / PI;
        let ek: Vec<Complex64> = self
            .eta
            .iter()
            .map(|e| (-I * e.conj() * tau).exp())
            .collect();
        let ej: Vec<Complex64> = self.eta.iter().map(|e| (I * e * taup).exp()).collect();
        let mut x = ZERO;
        let mut dxp = ZERO;
        let mut vv = ZERO;
        for k in 0..n {
            let a = self.eta[k].conj();
            for j in 0..n {
                let b = self.eta[j];
                let pref = self.res[k].conj() * self.res[j];
                let w = self.w[k][j];
                let e = ek[k] * ej[j];
                let fkj = ft[k][j];
                let fpkj = fpt[k][j];
                let fjk = fs[j][k].conj();
                let fpjk = fps[j][k].conj();
                x += pref * (w * e + sfac * (ej[j] * fkj + ek[k] * fjk));
                dxp += pref * (w * I * b * e + sfac * (I * b * ej[j] * fkj + ek[k] * fpjk));
                vv += pref * (w * a * b * e + sfac * (I * b * ej[j] * fpkj - I * a * ek[k] * fpjk));
            }
        }
        Ok((0.5 * x, 0.5 * dxp, 0.5 * vv))
    }

    fn taus(&self, t: f64, t_prime: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0 && t_prime >= 0.0 && t.is_finite() && t_prime.is_finite()) {
            return Err(Error::Domain(format!(
                "correlator times must be finite and >= 0, got ({t}, {t_prime})"
            )));
        }
        let w0 = self.params.omega0();
        Ok((w0 * t, w0 * t_prime))
    }

    fn pos_scale(&self) -> f64 {
        1.0 / (self.params.mass_m() * self.params.omega0())
    }

    /// Stationary part at time difference dt.
    pub fn qp(&self, dt: f64) -> Result<Complex64> {
        if !dt.is_finite() {
            return Err(Error::Domain(format!("non-finite time difference {dt}")));
        }
        Ok(self.qp_parts(self.params.omega0() * dt)?.q * self.pos_scale())
    }

    pub fn tr(&self, t: f64, t_prime: f64) -> Result<Complex64> {
        let (tau, taup) = self.taus(t, t_prime)?;
        Ok(self.transient(tau, taup)?.0 * self.pos_scale())
    }

    pub fn full(&self, t: f64, t_prime: f64) -> Result<CorrelatorPoint> {
        let (tau, taup) = self.taus(t, t_prime)?;
        let qp = self.qp_parts(tau - taup)?.q * self.pos_scale();
        let tr = self.transient(tau, taup)?.0 * self.pos_scale();
        Ok(CorrelatorPoint {
            t,
            t_prime,
            qp_value: qp,
            tr_value: tr,
            total: qp + tr,
        })
    }

    /// ∂_t ∂_{t′} ⟨x(t)x(t′)⟩.
    pub fn vv(&self, t: f64, t_prime: f64) -> Result<Complex64> {
        let (tau, taup) = self.taus(t, t_prime)?;
        let q = self.qp_parts(tau - taup)?;
        let (_, _, vtr) = self.transient(tau, taup)?;
        let w0 = self.params.omega0();
        Ok((-q.ddq + vtr) * w0 / self.params.mass_m())
    }

    /// ∂_{t′} ⟨x(t)x(t′)⟩.
    pub fn d_tprime(&self, t: f64, t_prime: f64) -> Result<Complex64> {
        let (tau, taup) = self.taus(t, t_prime)?;
        let q = self.qp_parts(tau - taup)?;
        let (_, dtr, _) = self.transient(tau, taup)?;
        Ok((-q.dq + dtr) / self.params.mass_m())
    }

    /// Equal-time moments (⟨x²⟩, ⟨p²⟩, ⟨{x,p}⟩/2) with imaginary-part checks.
    pub fn variances(&self, t: f64) -> Result<Variances> {
        let (tau, _) = self.taus(t, t)?;
        let q = self.qp_parts(0.0)?;
        let (x, dxp, vv) = self.transient(tau, tau)?;
        let xt = q.q + x;
        let vt = -q.ddq + vv;
        let xpt = -q.dq + dxp;
        real_part(xt, "position variance")?;
        real_part(vt, "velocity variance")?;
        // Im ⟨x p⟩ = 1/2 is the equal-time commutator
        if (xpt.im - 0.5).abs() > IMAG_RESIDUE_TOL.max(1e-10 * xpt.re.abs()) {
            return Err(Error::Consistency(format!(
                "Im<xp> = {} differs from 1/2 at t = {t}",
                xpt.im
            )));
        }
        let m = self.params.mass_m();
        let w0 = self.params.omega0();
        Ok(Variances {
            x_var: xt.re / (m * w0),
            p_var: vt.re * m * w0,
            xp_sym: xpt.re,
        })
    }

    /// Dimensionless equal-time values (C̃, ∂∂C̃) used by the energy
    /// observables.
    pub(crate) fn equal_time_dimless(&self, t: f64) -> Result<(f64, f64)> {
        let (tau, _) = self.taus(t, t)?;
        let q = self.qp_parts(0.0)?;
        let (x, _, vv) = self.transient(tau, tau)?;
        let xt = real_part(q.q + x, "position variance")?;
        let vt = real_part(-q.ddq + vv, "velocity variance")?;
        Ok((xt, vt))
    }

    /// G_kj over active roots, for diagnostics and tests.
    pub fn g_kj(&self, k: usize, j: usize, c: Complex64, alpha: f64) -> Result<Complex64> {
        let n = self.eta.len();
        if k >= n || j >= n {
            return Err(Error::Domain(format!("root index out of range ({k}, {j})")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let a = self.eta[k].conj();
        let b = self.eta[j];
        let (xc, ya, yb) = if alpha == 0.0 {
            (c.ln(), (-a).ln(), (-b).ln())
        } else {
            (g_aux(c * alpha)?, g_aux(-a * alpha)?, g_aux(-b * alpha)?)
        };
        Ok(g_pair(a, b, c, xc, ya, yb)?.0)
    }

    pub fn f_kj(&self, k: usize, j: usize, alpha: f64) -> Result<Complex64> {
        let n = self.eta.len();
        if k >= n || j >= n {
            return Err(Error::Domain(format!("root index out of range ({k}, {j})")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
        }
        let tab = self.g_table(alpha)?;
        Ok(self.f_mats(&tab)?.0[k][j])
    }
}

pub(crate) fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_RESIDUE_TOL * z.re.abs().max(1e-300) {
        return Err(Error::Consistency(format!(
            "{what} has imaginary residue {:e} (real part {:e})",
            z.im, z.re
        )));
    }
    Ok(z.re)
}

pub fn corr_qp(
    p: &ModelParams,
    s: &SpectralData,
    dt: f64,
    eps: EpsilonPolicy,
) -> Result<Complex64> {
    TwoPointEngine::new(p, s, eps)?.qp(dt)
}

/// G_kj(c, α) for root indices into `s.roots()`. α = 0 gives the α → 0⁺
/// limit.
pub fn g_kj(s: &SpectralData, k: usize, j: usize, c: Complex64, alpha: f64) -> Result<Complex64> {
    if k >= 4 || j >= 4 {
        return Err(Error::Domain(format!("root index out of range ({k}, {j})")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let a = s.roots()[k].conj();
    let b = s.roots()[j];
    let (xc, ya, yb) = if alpha == 0.0 {
        (c.ln(), (-a).ln(), (-b).ln())
    } else {
        (g_aux(c * alpha)?, g_aux(-a * alpha)?, g_aux(-b * alpha)?)
    };
    Ok(g_pair(a, b, c, xc, ya, yb)?.0)
}

/// F_kj(α) = (i/2)[G_kj(-η_r-iη₀) + G_kj(η_r-iη₀)] - (i/2)[G_kj(-η_r+iη₀) + G_kj(η_r+iη₀)].
pub fn f_kj(
    s: &SpectralData,
    p: &ModelParams,
    k: usize,
    j: usize,
    alpha: f64,
) -> Result<Complex64> {
    let er = p.eta_r();
    let e0 = p.eta_0();
    let g = |c: Complex64| g_kj(s, k, j, c, alpha);
    let lower = g(Complex64::new(-er, -e0))? + g(Complex64::new(er, -e0))?;
    let upper = g(Complex64::new(-er, e0))? + g(Complex64::new(er, e0))?;
    Ok(0.5 * I * (lower - upper))
}

pub fn corr_tr(p: &ModelParams, s: &SpectralData, t: f64, t_prime: f64) -> Result<Complex64> {
    TwoPointEngine::new(p, s, EpsilonPolicy::default())?.tr(t, t_prime)
}

pub fn corr_full(
    p: &ModelParams,
    s: &SpectralData,
    t: f64,
    t_prime: f64,
    eps: EpsilonPolicy,
) -> Result<CorrelatorPoint> {
    TwoPointEngine::new(p, s, eps)?.full(t, t_prime)
}

pub fn corr_vv(
    p: &ModelParams,
    s: &SpectralData,
    t: f64,
    t_prime: f64,
    eps: EpsilonPolicy,
) -> Result<Complex64> {
    TwoPointEngine::new(p, s, eps)?.vv(t, t_prime)
}

pub fn corr_d_tprime(
    p: &ModelParams,
    s: &SpectralData,
    t: f64,
    t_prime: f64,
    eps: EpsilonPolicy,
) -> Result<Complex64> {
    TwoPointEngine::new(p, s, eps)?.d_tprime(t, t_prime)
}

pub fn variances(
    p: &ModelParams,
    s: &SpectralData,
    t: f64,
    eps: EpsilonPolicy,
) -> Result<Variances> {
    TwoPointEngine::new(p, s, eps)?.variances(t)
}
