//! Globally adaptive Gauss-Kronrod (10/21) quadrature for complex-valued
//! integrands of a real variable.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_311,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = Complex64::new(0.0, 0.0);
    for i in 0..10 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).norm())
}

/// Integrate over [a, b].
pub fn integrate<F: FnMut(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], opts)
}

/// Integrate over [points[0], points[last]] with the given interior
/// breakpoints as the initial partition.
pub fn integrate_breaks<F: FnMut(f64) -> Complex64>(
    mut f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two points".into()));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("quadrature limits must be finite".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    // panels too narrow to split further are retired here
    let mut retired = Complex64::new(0.0, 0.0);
    let mut retired_err = 0.0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (v, e) = gk21(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut count = heap.len();
    loop {
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Tolerance(
                "integrand produced a non-finite value".into(),
            ));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a).abs() < 1e-15 * worst.a.abs().max(worst.b.abs()).max(1e-300)
        {
            retired += worst.value;
            retired_err += worst.error;
            continue;
        }
        if count >= opts.max_intervals {
            return Err(Error::Tolerance(format!(
                "{} panels used, error estimate {:.3e} above target {:.3e}",
                count, err, target
            )));
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        count += 1;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated rounding in the running totals
    let mut value = retired;
    let mut error = retired_err;
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    let target = opts.abs_tol.max(opts.rel_tol * value.norm());
    if error > target && retired_err > 0.0 {
        return Err(Error::Tolerance(format!(
            "panels reached machine resolution with error {error:.3e} above {target:.3e}"
        )));
    }
    Ok(QuadResult {
        value,
        error,
        intervals: count,
    })
}

/// Integrate over [a, ∞) through the map x = a + s/(1 - s).
pub fn integrate_to_infinity<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    integrate(
        |s| {
            if s >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let u = 1.0 - s;
            f(a + s / u) / (u * u)
        },
        0.0,
        1.0,
        opts,
    )
}

/// Cauchy principal value of ∫_a^b h(x)/(x - x0) dx for a < x0 < b.
/// A symmetric window of half-width `window` around x0 is handled through
/// ∫_0^δ [h(x0+s) - h(x0-s)]/s ds, which has no singularity.
pub fn principal_value<F: FnMut(f64) -> Complex64>(
    mut h: F,
    x0: f64,
    a: f64,
    b: f64,
    window: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(a < x0 && x0 < b) {
        return Err(Error::Domain(format!(
            "principal value pole {x0} not inside ({a}, {b})"
        )));
    }
    let d = window.min(x0 - a).min(b - x0);
    if !(d > 0.0) {
        return Err(Error::Domain(
            "principal value window must be positive".into(),
        ));
    }
    let local = integrate(
        |s| {
            if s == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            (h(x0 + s) - h(x0 - s)) / s
        },
        0.0,
        d,
        opts,
    )?;
    let mut g = |x: f64| h(x) / (x - x0);
    let left = if x0 - d > a {
        integrate(&mut g, a, x0 - d, opts)?
    } else {
        QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        }
    };
    let right = if b > x0 + d {
        integrate(&mut g, x0 + d, b, opts)?
    } else {
        QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        }
    };
    Ok(QuadResult {
        value: local.value + left.value + right.value,
        error: local.error + left.error + right.error,
        intervals: local.intervals + left.intervals + right.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(
            |x| Complex64::new(x.powi(7), x.powi(3)),
            -1.0,
            2.0,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - (256.0 - 1.0) / 8.0).abs() < 1e-12);
        assert!((r.value.im - (16.0 - 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_lorentzian() {
        let r = integrate_to_infinity(
            |x| Complex64::new(1.0 / (1.0 + x * x), 0.0),
            0.0,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn principal_value_of_reciprocal() {
        // PV ∫_0^3 1/(x-1) dx = ln 2
        let r = principal_value(
            |_| Complex64::new(1.0, 0.0),
            1.0,
            0.0,
            3.0,
            1e-3,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - 2f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(
            |x| Complex64::new(0.0, x).exp(),
            0.0,
            200.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let want = (Complex64::new(0.0, 200.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((r.value - want).norm() < 1e-10);
    }
}
