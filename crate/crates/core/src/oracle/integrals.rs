//! Spectral integrals evaluated by adaptive quadrature on the real frequency
//! axis. Everything runs in η = ω/ω₀ and τ = ω₀t and is scaled back at the end.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::QuadratureSpec;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Shape};
use crate::quadrature::{integrate_breaks, integrate_to_infinity, principal_value, QuadOptions};
use crate::specfun::exp_integral_en;
use crate::spectral::SpectralData;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Half-width, in units of ω₀, of the symmetric principal-value window.
pub const PV_WINDOW: f64 = 1e-3;

/// Window used around the pole of the B kernel.
const B_PV_WINDOW: f64 = 0.25;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_time(t: f64, name: &str) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!(
            "{name} must be finite and >= 0, got {t}"
        )));
    }
    Ok(())
}

/// Partition of [lo, hi] that puts panel edges at the spectral features and
/// then grows geometrically.
fn breakpoints(sh: &Shape, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![
        lo,
        hi,
        0.5,
        1.0,
        (1.0 + sh.sigma * sh.sigma).sqrt(),
        sh.eta_r,
        sh.eta_r - sh.eta_0,
        sh.eta_r + sh.eta_0,
        sh.eta_r + 3.0 * sh.eta_0,
    ];
    let mut x = 2.0;
    while x < hi {
        pts.push(x);
        pts.push(-x);
        x *= 2.0;
    }
    for v in pts.clone() {
        pts.push(-v);
    }
    pts.retain(|v| *v >= lo && *v <= hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// ∫_Λ^∞ e^{-iwη} η^{-n} dη = Λ^{1-n} E_n(iwΛ); w may have either sign.
fn power_tail(n: u32, w: f64, lambda: f64) -> Result<Complex64> {
    Ok(lambda.powi(1 - n as i32) * exp_integral_en(n, Complex64::new(0.0, w * lambda))?)
}

pub fn quad_zeta(
    beta_sq: &dyn Fn(f64) -> f64,
    p: &ModelParams,
    omega: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    quad_zeta_windowed(beta_sq, p, omega, PV_WINDOW, q)
}

/// ζ(ω) = ω₀² - ω² - (ω/2mμ)∫ β²(ν)/(ν - ω + i0) dν over the whole real ν
/// axis, split into a principal value and the local δ-term.
pub fn quad_zeta_windowed(
    beta_sq: &dyn Fn(f64) -> f64,
    p: &ModelParams,
    omega: f64,
    window: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be finite, got {omega}")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Domain(format!("window must be > 0, got {window}")));
    }
    let w0 = p.omega0();
    let base = w0 * w0 - omega * omega;
    if omega == 0.0 {
        return Ok(c(base));
    }
    let opts = q.options();
    let h = |nu: f64| c(beta_sq(nu));
    let span = w0;
    let lambda = q.cutoff() * w0 + omega.abs() + 2.0 * span;
    let pv = principal_value(h, omega, omega - span, omega + span, window * w0, &opts)?;
    let g = |nu: f64| c(beta_sq(nu) / (nu - omega));
    let scale = w0;
    let right_pts: Vec<f64> = breakpoints(&p.shape(), (omega + span) / scale, lambda / scale)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    let left_pts: Vec<f64> = breakpoints(&p.shape(), -lambda / scale, (omega - span) / scale)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    let mut total = pv.value
        + integrate_breaks(g, &right_pts, &opts)?.value
        + integrate_breaks(g, &left_pts, &opts)?.value;
    if q.tail_correction() {
        total += integrate_to_infinity(g, lambda, &opts)?.value;
        total += integrate_to_infinity(|u| g(-u), lambda, &opts)?.value;
    }
    let pre = omega / (2.0 * p.mass_m() * p.mu());
    let pv_real = total.re;
    Ok(Complex64::new(
        base - pre * pv_real,
        PI * pre * beta_sq(omega),
    ))
}

/// Im ζ̃/|ζ̃|² on the real axis.
fn spectral_weight(sh: &Shape, x: f64) -> f64 {
    let z = sh.zeta_real(x);
    z.im / z.norm_sqr()
}

/// (1/mπ)∫₀^∞ ζ_i/|ζ|² e^{-iωΔt} dω. Beyond the cutoff the weight is
/// σ²η₀/η⁵ and the tail is integrated in closed form.
pub fn quad_corr_qp(p: &ModelParams, dt: f64, q: &QuadratureSpec) -> Result<Complex64> {
    if !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be finite, got {dt}")));
    }
    let sh = p.shape();
    let alpha = p.omega0() * dt;
    let lam = q.cutoff();
    let f = |x: f64| spectral_weight(&sh, x) * Complex64::from_polar(1.0, -alpha * x);
    let mut v = integrate_breaks(f, &breakpoints(&sh, 0.0, lam), &q.options())?.value;
    if q.tail_correction() {
        v += sh.sigma * sh.sigma * sh.eta_0 * power_tail(5, alpha, lam)?;
    }
    Ok(v / (p.mass_m() * p.omega0() * PI))
}

/// -(1/π)∫_{-Λ}^{Λ} ω/ζ(ω) dω, which should equal i. The two halves are
/// folded so that the 1/ω tails cancel pointwise.
pub fn commutator_integral(p: &ModelParams, q: &QuadratureSpec) -> Result<Complex64> {
    let sh = p.shape();
    let lam = q.cutoff();
    let f = |x: f64| {
        let z = sh.zeta_real(x);
        x / z - x / z.conj()
    };
    let mut v = integrate_breaks(f, &breakpoints(&sh, 0.0, lam), &q.options())?.value;
    if q.tail_correction() {
        // x/ζ̃ - x/ζ̃* → -2iσ²η₀/x⁴
        v += Complex64::new(
            0.0,
            -2.0 * sh.sigma * sh.sigma * sh.eta_0 / (3.0 * lam.powi(3)),
        );
    }
    Ok(-v / PI)
}

/// A(t) = (1/π)∫ sin(ωt)/ζ(ω) dω over the whole axis. The integrand pairs
/// ±ω into 2i sin(ωt) Im(1/ζ), so the value is purely imaginary.
pub fn a_func(p: &ModelParams, t: f64, q: &QuadratureSpec) -> Result<Complex64> {
    check_time(t, "t")?;
    let sh = p.shape();
    let alpha = p.omega0() * t;
    if alpha == 0.0 {
        return Ok(ZERO);
    }
    let lam = q.cutoff();
    let f = |x: f64| c((alpha * x).sin() * (1.0 / sh.zeta_real(x)).im);
    let mut v = integrate_breaks(f, &breakpoints(&sh, 0.0, lam), &q.options())?.value;
    if q.tail_correction() {
        // Im(1/ζ̃) → -σ²η₀/η⁵
        v -= sh.sigma * sh.sigma * sh.eta_0 * power_tail(5, -alpha, lam)?.im;
    }
    Ok(2.0 * I * v / (PI * p.omega0()))
}

/// ∂_t A(t) = (1/π)∫ ω cos(ωt)/ζ(ω) dω.
pub fn a_func_deriv(p: &ModelParams, t: f64, q: &QuadratureSpec) -> Result<Complex64> {
    check_time(t, "t")?;
    let sh = p.shape();
    let alpha = p.omega0() * t;
    let lam = q.cutoff();
    let f = |x: f64| c(x * (alpha * x).cos() * (1.0 / sh.zeta_real(x)).im);
    let mut v = integrate_breaks(f, &breakpoints(&sh, 0.0, lam), &q.options())?.value;
    if q.tail_correction() {
        v -= sh.sigma * sh.sigma * sh.eta_0 * power_tail(4, -alpha, lam)?.re;
    }
    Ok(2.0 * I * v / PI)
}

/// 1/ζ̃ minus the reference -1/(η²+1), which shares its leading decay.
fn reduced_inverse(sh: &Shape, x: f64) -> Complex64 {
    1.0 / sh.zeta_real(x) + 1.0 / (x * x + 1.0)
}

/// Dimensionless B at η = ω/ω₀, τ = ω₀t.
fn b_dimless(
    sh: &Shape,
    eta: f64,
    tau: f64,
    q: &QuadratureSpec,
    opts: &QuadOptions,
) -> Result<Complex64> {
    let x0 = -eta;
    let lam = q.cutoff() + eta.abs() + 2.0;
    let h = |x: f64| Complex64::from_polar(1.0, tau * x) * reduced_inverse(sh, x);
    let g = |x: f64| h(x) / (x - x0);
    let pv = principal_value(h, x0, x0 - 1.0, x0 + 1.0, B_PV_WINDOW, opts)?.value;
    let left = integrate_breaks(g, &breakpoints(sh, -lam, x0 - 1.0), opts)?.value;
    let right = integrate_breaks(g, &breakpoints(sh, x0 + 1.0, lam), opts)?.value;
    let mut integral = pv + left + right;
    if q.tail_correction() {
        // reduced inverse → -(2+σ²)/x⁴ on both sides
        let k = 2.0 + sh.sigma * sh.sigma;
        integral -= k * (power_tail(5, -tau, lam)? - power_tail(5, tau, lam)?);
    }
    let reference = -PI * (-tau).exp() / (eta + I);
    let local = -I * PI * Complex64::from_polar(1.0, -eta * tau) * reduced_inverse(sh, -eta);
    Ok((reference + integral + local) / (2.0 * PI * I))
}

/// B_ω(t) = (1/2πi)∫ e^{iω′t}/[ζ(ω′)(ω′ + ω + i0)] dω′. The i0 is taken
/// through a principal value plus the local half-residue.
pub fn b_func(p: &ModelParams, omega: f64, t: f64, q: &QuadratureSpec) -> Result<Complex64> {
    check_time(t, "t")?;
    if !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be finite, got {omega}")));
    }
    let w0 = p.omega0();
    let b = b_dimless(&p.shape(), omega / w0, w0 * t, q, &q.options())?;
    Ok(b / (w0 * w0))
}

/// Σ_j R_j e^{iη_j τ}/(η_j + η) from closing the contour in the upper
/// half-plane.
pub fn b_func_contour(p: &ModelParams, s: &SpectralData, omega: f64, t: f64) -> Result<Complex64> {
    check_time(t, "t")?;
    let w0 = p.omega0();
    let eta = omega / w0;
    let tau = w0 * t;
    let v: Complex64 = s
        .roots()
        .iter()
        .zip(s.residues())
        .map(|(e, r)| r * (I * e * tau).exp() / (e + eta))
        .sum();
    Ok(v / (w0 * w0))
}

/// The transient correlator assembled from its general spectral
/// representation: the (ω₀ ± i∂)A products plus the ζ_i-weighted B
/// integrals.
pub fn quad_corr_tr_general(
    p: &ModelParams,
    t: f64,
    t_prime: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    check_time(t, "t")?;
    check_time(t_prime, "t_prime")?;
    let w0 = p.omega0();
    let (tau, taup) = (w0 * t, w0 * t_prime);
    // A and its derivative in units where ω₀ = 1
    let (a_t, da_t) = (w0 * a_func(p, t, q)?, a_func_deriv(p, t, q)?);
    let (a_tp, da_tp) = (w0 * a_func(p, t_prime, q)?, a_func_deriv(p, t_prime, q)?);
    let front = (a_t + I * da_t) * (a_tp + I * da_tp).conj();

    let sh = p.shape();
    let inner = q.options();
    let outer = QuadOptions {
        abs_tol: (q.abs_tol() * 1e3).max(1e-11),
        rel_tol: (q.rel_tol() * 1e3).max(1e-8),
        max_intervals: inner.max_intervals,
    };
    let mut failure = None;
    let f = |x: f64| {
        let z = sh.zeta_real(x);
        if z.im == 0.0 {
            return ZERO;
        }
        let pair = b_dimless(&sh, x, tau, q, &inner).and_then(|bt| {
            let btp = if taup == tau {
                bt
            } else {
                b_dimless(&sh, x, taup, q, &inner)?
            };
            Ok((bt, btp))
        });
        match pair {
            Ok((bt, btp)) => {
                z.im * (Complex64::from_polar(1.0, -x * tau) * btp.conj() / z.conj()
                    + bt * Complex64::from_polar(1.0, x * taup) / z
                    + bt * btp.conj())
            }
            Err(e) => {
                failure.get_or_insert(e);
                ZERO
            }
        }
    };
    let lam = q.cutoff();
    let mut body = integrate_breaks(f, &breakpoints(&sh, 0.0, lam), &outer)?.value;
    if let Some(e) = failure {
        return Err(e);
    }
    if q.tail_correction() {
        // B_ω(τ) → A(τ)/η + i∂A(τ)/η², ζ_i → σ²η₀/η and 1/ζ → -1/η²
        let k = sh.sigma * sh.sigma * sh.eta_0;
        body += k * a_t * a_tp.conj() / (2.0 * lam * lam);
        body += k * I * (da_t * a_tp.conj() - a_t * da_tp.conj()) / (3.0 * lam.powi(3));
        body -= k * a_tp.conj() * power_tail(4, tau, lam)?;
        body -= k * a_t * power_tail(4, -taup, lam)?;
    }
    let total = 0.5 * (front + 2.0 / PI * body);
    Ok(total / (p.mass_m() * w0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{corr_qp, corr_tr, EpsilonPolicy};
    use crate::model::{coupling_beta_sq, zeta_closed};
    use crate::spectral::find_roots;

    fn reference() -> (ModelParams, SpectralData) {
        let p = ModelParams::natural(1.0, 1.0, 0.5).unwrap();
        let s = find_roots(&p).unwrap();
        (p, s)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zeta_by_quadrature() {
        let (p, _) = reference();
        let q = QuadratureSpec::default();
        let beta = |nu: f64| coupling_beta_sq(&p, nu);
        let z = quad_zeta(&beta, &p, 2.0, &q).unwrap();
        let exact = zeta_closed(&p, c(2.0)).unwrap();
        assert!(rel(z, exact) < 1e-8, "{z} vs {exact}");
        assert_eq!(quad_zeta(&beta, &p, 0.0, &q).unwrap(), c(1.0));
        let none = |_: f64| 0.0;
        assert!((quad_zeta(&none, &p, 1.7, &q).unwrap() - c(1.0 - 1.7 * 1.7)).norm() < 1e-14);
        let wide = quad_zeta_windowed(&beta, &p, 0.8, 1e-2, &q).unwrap();
        let narrow = quad_zeta_windowed(&beta, &p, 0.8, 1e-4, &q).unwrap();
        assert!(rel(wide, narrow) < 1e-10);
    }

    #[test]
    fn qp_by_quadrature() {
        let (p, s) = reference();
        let q = QuadratureSpec::default();
        for dt in [0.1, 1.0, 5.0, 20.0] {
            let a = quad_corr_qp(&p, dt, &q).unwrap();
            let b = corr_qp(&p, &s, dt, EpsilonPolicy::default()).unwrap();
            assert!(rel(a, b) < 1e-6, "dt = {dt}: {a} vs {b}");
            let m = quad_corr_qp(&p, -dt, &q).unwrap();
            assert!((m - a.conj()).norm() < 1e-12);
        }
        let v = quad_corr_qp(&p, 0.0, &q).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15);
    }

    #[test]
    fn commutator_is_i() {
        let (p, _) = reference();
        let q = QuadratureSpec::default().with_cutoff(1e4).unwrap();
        let v = commutator_integral(&p, &q).unwrap();
        assert!((v - I).norm() < 1e-4, "{v}");
    }

    #[test]
    fn a_matches_residue_sum() {
        let (p, s) = reference();
        let q = QuadratureSpec::default();
        assert_eq!(a_func(&p, 0.0, &q).unwrap(), ZERO);
        for t in [0.5, 1.0, 3.0] {
            let a = a_func(&p, t, &q).unwrap();
            let contour: Complex64 = s
                .roots()
                .iter()
                .zip(s.residues())
                .map(|(e, r)| r * (I * e * t).exp())
                .sum();
            assert!((a - contour).norm() < 1e-8, "t = {t}: {a} vs {contour}");
            let d = a_func_deriv(&p, t, &q).unwrap();
            let dc: Complex64 = s
                .roots()
                .iter()
                .zip(s.residues())
                .map(|(e, r)| r * I * e * (I * e * t).exp())
                .sum();
            assert!((d - dc).norm() < 1e-8);
        }
    }

    #[test]
    fn a_decoupled_limit() {
        let p = ModelParams::natural(1e-3, 2.0, 0.5).unwrap();
        let a = a_func(&p, 1.0, &QuadratureSpec::default()).unwrap();
        assert!(a.re.abs() < 1e-12);
        assert!((a.im + 1f64.sin()).abs() < 1e-5, "{a}");
    }

    #[test]
    fn b_matches_contour() {
        let (p, s) = reference();
        let q = QuadratureSpec::default();
        for (w, t) in [(0.0, 0.0), (0.7, 0.0), (1.0, 1.0), (3.0, 2.5)] {
            let b = b_func(&p, w, t, &q).unwrap();
            let bc = b_func_contour(&p, &s, w, t).unwrap();
            assert!((b - bc).norm() < 1e-8, "({w}, {t}): {b} vs {bc}");
        }
    }

    #[test]
    fn transient_general_form() {
        let (p, s) = reference();
        let q = QuadratureSpec::default();
        let a = quad_corr_tr_general(&p, 2.0, 1.0, &q).unwrap();
        let b = corr_tr(&p, &s, 2.0, 1.0).unwrap();
        assert!(rel(a, b) < 1e-5, "{a} vs {b}");
    }
}
