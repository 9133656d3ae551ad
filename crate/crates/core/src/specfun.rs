//! Sine and cosine integrals of complex argument, the exponential integral
//! E1 they are built from at large modulus, and the auxiliary function
//! g(z) = e^{iz} [iπ/2 + Ci(z) - i Si(z)].
//!
//! Ci uses the principal branch of the logarithm, so it has a cut along the
//! non-positive real axis. Si is entire.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_SERIES_TERMS: usize = 4000;
const MAX_CF_ITERATIONS: usize = 20_000;

/// Controls the switch between the power series and the E1-based form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    pub series_asymptotic_crossover: f64,
    pub target_abs_tol: f64,
}

impl EvalPolicy {
    pub fn new(series_asymptotic_crossover: f64, target_abs_tol: f64) -> Result<Self> {
        if !(series_asymptotic_crossover > 0.0) {
            return Err(Error::InvalidParams(format!(
                "series/asymptotic crossover must be positive, got {series_asymptotic_crossover}"
            )));
        }
        if !(target_abs_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target tolerance must be positive, got {target_abs_tol}"
            )));
        }
        Ok(Self {
            series_asymptotic_crossover,
            target_abs_tol,
        })
    }
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            series_asymptotic_crossover: 8.0,
            target_abs_tol: 1e-17,
        }
    }
}

fn finite(z: Complex64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite argument {z}")))
    }
}

// Map a signed-zero imaginary part to +0 so that points on the real axis
// always sit on the upper lip of a cut.
fn clean(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn on_negative_axis(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0
}

pub fn sin_integral(z: Complex64) -> Result<Complex64> {
    sin_integral_with(z, &EvalPolicy::default())
}

pub fn sin_integral_with(z: Complex64, policy: &EvalPolicy) -> Result<Complex64> {
    finite(z, "Si")?;
    let z = clean(z);
    if z.norm() < policy.series_asymptotic_crossover {
        return si_series(z, policy.target_abs_tol);
    }
    let (w, flipped) = reflect_right(z);
    let (si, _) = si_ci_right(w)?;
    Ok(if flipped { -si } else { si })
}

pub fn cos_integral(z: Complex64) -> Result<Complex64> {
    cos_integral_with(z, &EvalPolicy::default())
}

pub fn cos_integral_with(z: Complex64, policy: &EvalPolicy) -> Result<Complex64> {
    finite(z, "Ci")?;
    let z = clean(z);
    if on_negative_axis(z) {
        return Err(Error::Domain(format!(
            "Ci: argument {z} lies on the branch cut (-inf, 0]"
        )));
    }
    if z.norm() < policy.series_asymptotic_crossover {
        return ci_series(z, policy.target_abs_tol);
    }
    let (w, flipped) = reflect_right(z);
    let (_, ci) = si_ci_right(w)?;
    if !flipped {
        return Ok(ci);
    }
    // Ci(z) - Ci(-z) = ln z - ln(-z) = ±iπ
    Ok(if z.im > 0.0 { ci + I * PI } else { ci - I * PI })
}

/// g(z) = e^{iz}[iπ/2 + Ci(z) - i Si(z)], evaluated through E1 to avoid the
/// cancellation between Si and Ci far from the real axis.
pub fn g_aux(z: Complex64) -> Result<Complex64> {
    finite(z, "g")?;
    let z = clean(z);
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("g: logarithmic singularity at z = 0".into()));
    }
    if on_negative_axis(z) {
        return Err(Error::Domain(format!(
            "g: argument {z} lies on the Ci branch cut"
        )));
    }
    let mut g = -e1_scaled(I * z)?;
    if z.re < 0.0 && z.im > 0.0 {
        // iz has crossed the E1 cut while z stays on the principal Ci sheet
        g += 2.0 * PI * I * (I * z).exp();
    }
    Ok(g)
}

/// g built literally from Si and Ci. Kept as the reference composition
/// for tests; it loses accuracy when |Im z| is large.
pub fn g_aux_composed(z: Complex64) -> Result<Complex64> {
    let si = sin_integral(z)?;
    let ci = cos_integral(z)?;
    Ok((I * z).exp() * (I * FRAC_PI_2 + ci - I * si))
}

/// Exponential integral E1(w) on the principal branch. Points on the
/// negative real axis take the value from the upper side of the cut.
pub fn exp_integral_e1(w: Complex64) -> Result<Complex64> {
    finite(w, "E1")?;
    let w = clean(w);
    Ok(e1_scaled(w)? * (-w).exp())
}

/// Generalised exponential integral E_n(w) = ∫_1^∞ e^{-wt} t^{-n} dt for
/// n ≥ 1 and Re w ≥ 0.
pub fn exp_integral_en(n: u32, w: Complex64) -> Result<Complex64> {
    finite(w, "E_n")?;
    if n == 0 {
        return Err(Error::Domain("E_n requires n >= 1".into()));
    }
    if w.re < 0.0 {
        return Err(Error::Domain(format!("E_n: Re w < 0 not supported ({w})")));
    }
    let nf = n as f64;
    if w.norm() == 0.0 {
        if n == 1 {
            return Err(Error::Domain("E_1 diverges at 0".into()));
        }
        return Ok(Complex64::new(1.0 / (nf - 1.0), 0.0));
    }
    if n == 1 {
        return exp_integral_e1(w);
    }
    if w.norm() < 1.0 {
        // series with the digamma term at k = n - 1
        let nm1 = n - 1;
        let mut psi = -EULER_GAMMA;
        for k in 1..=nm1 {
            psi += 1.0 / k as f64;
        }
        let mut sum = Complex64::new(1.0 / (nf - 1.0), 0.0);
        let mut fact = Complex64::new(1.0, 0.0);
        for k in 1..MAX_SERIES_TERMS {
            fact *= -w / k as f64;
            let del = if k as u32 == nm1 {
                fact * (psi - w.ln())
            } else {
                -fact / (k as f64 - nm1 as f64)
            };
            sum += del;
            if del.norm() < 1e-17 * sum.norm() && k as u32 > nm1 {
                return Ok(sum);
            }
        }
        return Err(Error::Convergence(format!("E_{n} series at {w}")));
    }
    let tiny = 1e-300;
    let mut b = w + nf;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_CF_ITERATIONS {
        let fi = i as f64;
        let a = -fi * (nf - 1.0 + fi);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            return Ok(h * (-w).exp());
        }
    }
    Err(Error::Convergence(format!(
        "E_{n} continued fraction at {w}"
    )))
}

// e^{w} E1(w), finite for large Re w where E1 itself underflows.
fn e1_scaled(w: Complex64) -> Result<Complex64> {
    let w = clean(w);
    if w.norm() == 0.0 {
        return Err(Error::Domain("E1: logarithmic singularity at 0".into()));
    }
    let r = w.norm();
    let near_cut = w.arg().abs() > 0.85 * PI;
    if on_negative_axis(w) || r < 4.0 || (r < 40.0 && near_cut) {
        Ok(e1_series(w)? * w.exp())
    } else {
        e1_continued_fraction(w)
    }
}

fn e1_series(w: Complex64) -> Result<Complex64> {
    let r = w.norm();
    if r > 700.0 {
        return Err(Error::Domain(format!("E1: |w| = {r} overflows the series")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= -w / kf;
        let add = term / kf;
        sum += add;
        if kf > r && add.norm() <= 1e-17 * sum.norm() {
            return Ok(-EULER_GAMMA - w.ln() - sum);
        }
    }
    Err(Error::Convergence(format!("E1 series at {w}")))
}

fn e1_continued_fraction(w: Complex64) -> Result<Complex64> {
    let tiny = 1e-300;
    let mut b = w + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_CF_ITERATIONS {
        let fi = i as f64;
        let a = -fi * fi;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!("E1 continued fraction at {w}")))
}

fn reflect_right(z: Complex64) -> (Complex64, bool) {
    if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
        (clean(-z), true)
    } else {
        (z, false)
    }
}

// Si and Ci for Re w > 0 or w on the positive imaginary axis.
fn si_ci_right(w: Complex64) -> Result<(Complex64, Complex64)> {
    let ep = exp_integral_e1(clean(I * w))?;
    let em = exp_integral_e1(clean(-I * w))?;
    let si = FRAC_PI_2 + (ep - em) / (2.0 * I);
    let ci = -(ep + em) / 2.0;
    Ok((si, ci))
}

fn si_series(z: Complex64, tol: f64) -> Result<Complex64> {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= -z2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.norm() <= tol * sum.norm().max(1.0) && kf > z.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("Si series at {z}")))
}

fn ci_series(z: Complex64, tol: f64) -> Result<Complex64> {
    let z2 = z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let lead = EULER_GAMMA + z.ln();
    for k in 1..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= -z2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        let add = term / (2.0 * kf);
        sum += add;
        if add.norm() <= tol * (sum + lead).norm().max(1.0) && kf > z.norm() {
            return Ok(lead + sum);
        }
    }
    Err(Error::Convergence(format!("Ci series at {z}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad_opts() -> QuadOptions {
        QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_intervals: 2000,
        }
    }

    #[test]
    fn si_at_zero_and_one() {
        assert_eq!(sin_integral(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let q = integrate(
            |t| {
                if t == 0.0 {
                    c(1.0, 0.0)
                } else {
                    c(t.sin() / t, 0.0)
                }
            },
            0.0,
            1.0,
            &quad_opts(),
        )
        .unwrap();
        let si = sin_integral(c(1.0, 0.0)).unwrap();
        assert!((si - q.value).norm() < 1e-12, "{si} vs {}", q.value);
    }

    #[test]
    fn si_tends_to_half_pi() {
        let si = sin_integral(c(1e6, 0.0)).unwrap();
        assert!((si.re - FRAC_PI_2).abs() < 2e-6);
        assert!(si.im.abs() < 1e-15);
    }

    #[test]
    fn ci_at_one_matches_quadrature() {
        let q = integrate(
            |t| {
                if t == 0.0 {
                    c(0.0, 0.0)
                } else {
                    c((t.cos() - 1.0) / t, 0.0)
                }
            },
            0.0,
            1.0,
            &quad_opts(),
        )
        .unwrap();
        let want = EULER_GAMMA + q.value;
        let ci = cos_integral(c(1.0, 0.0)).unwrap();
        assert!((ci - want).norm() < 1e-12);
    }

    #[test]
    fn ci_vanishes_at_large_real() {
        assert!(cos_integral(c(1e7, 0.0)).unwrap().norm() < 1e-7);
    }

    #[test]
    fn ci_rejects_cut() {
        assert!(cos_integral(c(0.0, 0.0)).is_err());
        assert!(cos_integral(c(-2.0, 0.0)).is_err());
        assert!(cos_integral(c(-2.0, -0.0)).is_err());
        assert!(cos_integral(c(-20.0, 0.0)).is_err());
        assert!(sin_integral(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn ci_schwarz_reflection() {
        let z = c(2.0, 1.0);
        let a = cos_integral(z).unwrap().conj();
        let b = cos_integral(z.conj()).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn ci_reference_values() {
        // Ci(2+i) and Si(2+i), 30-digit reference values
        let ci = cos_integral(c(2.0, 1.0)).unwrap();
        let si = sin_integral(c(2.0, 1.0)).unwrap();
        assert!((ci - c(0.584_475_996_878_247_7, -0.297_495_177_638_134_0)).norm() < 1e-14);
        assert!((si - c(1.833_209_921_504_843_6, 0.457_691_711_286_688_0)).norm() < 1e-14);
    }

    #[test]
    fn e1_reference_values() {
        let e = exp_integral_e1(c(1.0, 0.0)).unwrap();
        assert!((e.re - 0.219_383_934_395_520_27).abs() < 1e-15);
        // upper lip of the cut: E1(-1 + i0) = -Ei(1) - iπ
        let e = exp_integral_e1(c(-1.0, 0.0)).unwrap();
        assert!((e - c(-1.895_117_816_355_936_8, -PI)).norm() < 1e-14);
        let e = exp_integral_e1(c(-1.0, -0.0)).unwrap();
        assert!((e.im + PI).abs() < 1e-14);
    }

    #[test]
    fn g_composed_and_direct_agree() {
        for z in [
            c(0.5, 0.0),
            c(1.3, -0.4),
            c(-3.0, 2.0),
            c(0.2, 5.0),
            c(12.0, 0.3),
            c(-7.0, 9.0),
            c(4.0, -3.0),
            c(0.0, 2.5),
        ] {
            let a = g_aux(z).unwrap();
            let b = g_aux_composed(z).unwrap();
            assert!((a - b).norm() < 1e-11 * (1.0 + a.norm()), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn g_at_half_matches_quadrature_composition() {
        let opts = quad_opts();
        let si = integrate(
            |t| {
                if t == 0.0 {
                    c(1.0, 0.0)
                } else {
                    c(t.sin() / t, 0.0)
                }
            },
            0.0,
            0.5,
            &opts,
        )
        .unwrap()
        .value;
        let cm = integrate(
            |t| {
                if t == 0.0 {
                    c(0.0, 0.0)
                } else {
                    c((t.cos() - 1.0) / t, 0.0)
                }
            },
            0.0,
            0.5,
            &opts,
        )
        .unwrap()
        .value;
        let ci = EULER_GAMMA + 0.5f64.ln() + cm;
        let want = c(0.0, 0.5).exp() * (I * FRAC_PI_2 + ci - I * si);
        let got = g_aux(c(0.5, 0.0)).unwrap();
        assert!((got - want).norm() < 1e-10);
    }

    #[test]
    fn g_decays_like_i_over_alpha() {
        let a = 1e4;
        let v = g_aux(c(a, 0.0)).unwrap() * a;
        // next term of the expansion is -1/α
        assert!((v - I).norm() < 1.01 / a);
        assert!((v - I + 1.0 / a).norm() < 3.0 / (a * a));
    }

    #[test]
    fn g_derivative_identity() {
        let z = c(1.3, -0.4);
        let h = 1e-5;
        let d = (g_aux(z + h).unwrap() - g_aux(z - h).unwrap()) / (2.0 * h);
        let r = d - I * g_aux(z).unwrap() - 1.0 / z;
        assert!(r.norm() < 1e-8, "{r}");
    }

    #[test]
    fn g_rejects_zero() {
        assert!(g_aux(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn en_reference_values() {
        let cases = [
            (
                5,
                c(0.0, 40.0),
                c(-0.020_321_924_198_482_436, 0.014_101_262_687_374_456),
            ),
            (
                5,
                c(0.0, 0.5),
                c(0.193_238_078_729_849_12, -0.149_664_047_726_051_36),
            ),
            (
                3,
                c(2.0, 5.0),
                c(0.017_298_363_471_826_248, 0.008_295_268_203_113_615),
            ),
            (
                5,
                c(0.0, 2000.0),
                c(-4.654_755_842_223_092e-4, 1.825_658_594_224_263_4e-4),
            ),
        ];
        for (n, w, want) in cases {
            let got = exp_integral_en(n, w).unwrap();
            assert!(
                (got - want).norm() < 1e-15 + 1e-13 * want.norm(),
                "n={n} w={w}: {got}"
            );
        }
        assert!((exp_integral_en(5, c(0.0, 0.0)).unwrap().re - 0.25).abs() < 1e-16);
    }
}
