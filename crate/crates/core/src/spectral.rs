//! Roots and residues of ω₀²/ζ(ω₀η) = D(η)/N(η), where
//! N(η) = (1-η²)[(η-iη₀)² - η_r²] + σ²η(η-iη₀) and D(η) = (η-iη₀)² - η_r².

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Shape};

/// Roots below this imaginary part are treated as lying on the real axis.
pub const NEAR_REAL_TOL: f64 = 1e-10;
/// Scaled residual |N(η)| / Σ|c_k||η|^k accepted for a root.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Residues smaller than this, relative to the largest, mark a root that
/// cancels against D (η_r = 0 puts a common factor η - iη₀ in D and N).
pub const REMOVABLE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    roots: [Complex64; 4],
    residues: [Complex64; 4],
}

impl SpectralData {
    /// Assemble without checks. Used for negative controls; normal code
    /// goes through [`find_roots`].
    pub fn from_parts(roots: [Complex64; 4], residues: [Complex64; 4]) -> Self {
        Self { roots, residues }
    }

    pub fn roots(&self) -> &[Complex64; 4] {
        &self.roots
    }

    pub fn residues(&self) -> &[Complex64; 4] {
        &self.residues
    }

    /// Indices of roots that carry weight in 1/ζ.
    pub fn active(&self) -> Vec<usize> {
        let scale = self.residues.iter().map(|r| r.norm()).fold(0.0, f64::max);
        (0..4)
            .filter(|&j| self.residues[j].norm() > REMOVABLE_TOL * scale)
            .collect()
    }

    pub fn sum_residues(&self) -> Complex64 {
        self.residues.iter().sum()
    }

    pub fn first_moment(&self) -> Complex64 {
        self.roots
            .iter()
            .zip(&self.residues)
            .map(|(e, r)| e * r)
            .sum()
    }

    /// Σ_j R_j/(η - η_j), the partial-fraction form of ω₀²/ζ(ω₀η).
    pub fn reconstruct(&self, eta: Complex64) -> Complex64 {
        self.roots
            .iter()
            .zip(&self.residues)
            .map(|(e, r)| r / (eta - e))
            .sum()
    }

    /// Flat record: η_1..η_4 then R_1..R_4, each as (re, im).
    pub fn to_flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for j in 0..4 {
            out[2 * j] = self.roots[j].re;
            out[2 * j + 1] = self.roots[j].im;
            out[8 + 2 * j] = self.residues[j].re;
            out[8 + 2 * j + 1] = self.residues[j].im;
        }
        out
    }

    pub fn from_flat(v: &[f64; 16]) -> Self {
        let mut roots = [Complex64::new(0.0, 0.0); 4];
        let mut residues = roots;
        for j in 0..4 {
            roots[j] = Complex64::new(v[2 * j], v[2 * j + 1]);
            residues[j] = Complex64::new(v[8 + 2 * j], v[8 + 2 * j + 1]);
        }
        Self { roots, residues }
    }

    pub fn record_labels() -> [&'static str; 8] {
        [
            "eta_1", "eta_2", "eta_3", "eta_4", "R_1", "R_2", "R_3", "R_4",
        ]
    }
}

/// Monic coefficients c_0..c_4 of -N(η).
pub fn pole_polynomial(sh: &Shape) -> [Complex64; 5] {
    let s2 = sh.sigma * sh.sigma;
    let e0 = sh.eta_0;
    let er = sh.eta_r;
    [
        Complex64::new(e0 * e0 + er * er, 0.0),
        Complex64::new(0.0, e0 * (2.0 + s2)),
        Complex64::new(-(1.0 + s2 + e0 * e0 + er * er), 0.0),
        Complex64::new(0.0, -2.0 * e0),
        Complex64::new(1.0, 0.0),
    ]
}

fn horner(c: &[Complex64; 5], x: Complex64) -> (Complex64, Complex64) {
    let mut p = c[4];
    let mut dp = Complex64::new(0.0, 0.0);
    for k in (0..4).rev() {
        dp = dp * x + p;
        p = p * x + c[k];
    }
    (p, dp)
}

fn scaled_residual(c: &[Complex64; 5], x: Complex64) -> f64 {
    let (p, _) = horner(c, x);
    let r = x.norm();
    let mut scale = 0.0;
    let mut pow = 1.0;
    for ck in c {
        scale += ck.norm() * pow;
        pow *= r;
    }
    p.norm() / scale
}

/// Descending imaginary part; near-equal imaginary parts fall back to
/// ascending real part.
pub fn root_order(a: &Complex64, b: &Complex64) -> Ordering {
    let tol = 1e-12 * (1.0 + a.norm().max(b.norm()));
    if (a.im - b.im).abs() <= tol {
        a.re.total_cmp(&b.re)
    } else {
        b.im.total_cmp(&a.im)
    }
}

/// All four roots of the pole equation, polished and ordered, without the
/// upper-half-plane filter applied by [`find_roots`].
pub fn solve_pole_equation(p: &ModelParams) -> Result<[Complex64; 4]> {
    let c = pole_polynomial(&p.shape());
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let companion = Matrix4::new(
        -c[3], -c[2], -c[1], -c[0], //
        one, z, z, z, //
        z, one, z, z, //
        z, z, one, z,
    );
    let eig = companion
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Convergence("companion matrix Schur form failed".into()))?;
    let mut roots = [z; 4];
    for (j, r) in roots.iter_mut().enumerate() {
        let mut x = eig[j];
        for _ in 0..2 {
            let (f, df) = horner(&c, x);
            if df.norm() == 0.0 {
                break;
            }
            let next = x - f / df;
            if scaled_residual(&c, next) <= scaled_residual(&c, x) {
                x = next;
            }
        }
        *r = x;
    }
    roots.sort_by(root_order);
    Ok(roots)
}

/// Roots η_j (all in the upper half plane) and residues R_j = D(η_j)/N′(η_j).
pub fn find_roots(p: &ModelParams) -> Result<SpectralData> {
    let sh = p.shape();
    let c = pole_polynomial(&sh);
    let roots = solve_pole_equation(p)?;
    for (j, r) in roots.iter().enumerate() {
        if r.im < NEAR_REAL_TOL {
            return Err(Error::Degenerate(format!(
                "root eta_{} = {} has imaginary part below {NEAR_REAL_TOL:e}",
                j + 1,
                r
            )));
        }
        let res = scaled_residual(&c, *r);
        if res > RESIDUAL_TOL {
            return Err(Error::Convergence(format!(
                "root eta_{} = {} leaves residual {res:.3e}",
                j + 1,
                r
            )));
        }
    }
    let mut residues = [Complex64::new(0.0, 0.0); 4];
    for j in 0..4 {
        let (_, dmonic) = horner(&c, roots[j]);
        // N = -monic, so N' = -monic'
        residues[j] = sh.lorentz_den(roots[j]) / (-dmonic);
    }
    Ok(SpectralData { roots, residues })
}

/// O(σ²) expansions around the decoupled roots ±1 and ±η_r + iη₀.
pub fn weak_coupling_roots(p: &ModelParams) -> Result<[Complex64; 4]> {
    let s2 = p.sigma() * p.sigma();
    let e0 = p.eta_0();
    let er = p.eta_r();
    let i = Complex64::new(0.0, 1.0);
    let mut out = [Complex64::new(0.0, 0.0); 4];
    let mut k = 0;
    for sign in [1.0, -1.0] {
        let a = Complex64::new(sign, -e0);
        let den = a * a - er * er;
        if den.norm() < 1e-9 {
            return Err(Error::Degenerate(format!(
                "weak-coupling expansion denominator {den} vanishes near eta = {sign}"
            )));
        }
        out[k] = sign + 0.5 * s2 * a / den;
        k += 1;
        let b = sign * er + i * e0;
        let den = b * b - 1.0;
        if den.norm() < 1e-9 {
            return Err(Error::Degenerate(format!(
                "weak-coupling expansion denominator {den} vanishes near eta = {b}"
            )));
        }
        out[k] = b + 0.5 * s2 * b / den;
        k += 1;
    }
    out.sort_by(root_order);
    Ok(out)
}

/// Leading large-σ forms: ±σ + iη₀/2, (i/σ²)(η₀²+η_r²)/η₀ and
/// iη₀ - (i/σ²)η_r²(η₀²+1)/η₀.
pub fn strong_coupling_roots(p: &ModelParams) -> Result<[Complex64; 4]> {
    let s = p.sigma();
    let e0 = p.eta_0();
    let er = p.eta_r();
    if e0.abs() < 1e-12 {
        return Err(Error::Degenerate("eta_0 too close to zero".into()));
    }
    let s2 = s * s;
    let mut out = [
        Complex64::new(s, 0.5 * e0),
        Complex64::new(-s, 0.5 * e0),
        Complex64::new(0.0, (e0 * e0 + er * er) / (e0 * s2)),
        Complex64::new(0.0, e0 - er * er * (e0 * e0 + 1.0) / (e0 * s2)),
    ];
    out.sort_by(root_order);
    Ok(out)
}

/// 1/(ω₀ min_j Im η_j) over roots that carry weight.
pub fn relaxation_time(s: &SpectralData, p: &ModelParams) -> f64 {
    let gamma = s
        .active()
        .iter()
        .map(|&j| s.roots[j].im)
        .fold(f64::INFINITY, f64::min);
    1.0 / (p.omega0() * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_match_err(a: &[Complex64; 4], b: &[Complex64; 4], relative: bool) -> f64 {
        let mut worst: f64 = 0.0;
        for x in a {
            let best = b
                .iter()
                .map(|y| {
                    let d = (x - y).norm();
                    if relative {
                        d / y.norm()
                    } else {
                        d
                    }
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }

    #[test]
    fn reference_roots_and_residues() {
        let p = ModelParams::natural(1.0, 1.0, 0.5).unwrap();
        let s = find_roots(&p).unwrap();
        // the four roots share Im = 0.25; order falls back to Re
        let want = [
            Complex64::new(-1.561_249_5, 0.25),
            Complex64::new(-0.661_437_83, 0.25),
            Complex64::new(0.661_437_83, 0.25),
            Complex64::new(1.561_249_5, 0.25),
        ];
        for j in 0..4 {
            assert!((s.roots()[j] - want[j]).norm() < 1e-7, "{:?}", s.roots());
        }
        assert!((s.residues()[3] - Complex64::new(-0.220_176_2, 0.125)).norm() < 1e-6);
        assert!(s.sum_residues().norm() < 1e-14);
        assert!((s.first_moment() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn decoupled_limit_factorizes() {
        let p = ModelParams::natural(1e-6, 0.7, 0.4).unwrap();
        let r = solve_pole_equation(&p).unwrap();
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.7, 0.4),
            Complex64::new(-0.7, 0.4),
        ];
        assert!(max_match_err(&r, &want, false) < 1e-10);
        // near-real roots are refused by the checked solver
        assert!(matches!(find_roots(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn weak_coupling_matches() {
        let p = ModelParams::natural(1e-3, 2.0, 0.3).unwrap();
        let exact = find_roots(&p).unwrap();
        let weak = weak_coupling_roots(&p).unwrap();
        assert!(max_match_err(&weak, exact.roots(), false) < 1e-8);
        let near_one = Complex64::new(1.0, 0.0)
            + 0.5e-6 * Complex64::new(1.0, -0.3) / (Complex64::new(1.0, -0.3).powi(2) - 4.0);
        assert!(exact.roots().iter().any(|r| (r - near_one).norm() < 1e-8));

        let p = ModelParams::natural(1e-2, 0.5, 0.2).unwrap();
        let exact = find_roots(&p).unwrap();
        let weak = weak_coupling_roots(&p).unwrap();
        assert!(max_match_err(&weak, exact.roots(), false) < 1e-7);
    }

    #[test]
    fn weak_coupling_zeroth_order() {
        // σ is tiny but nonzero because ModelParams rejects σ = 0
        let p = ModelParams::natural(1e-30, 0.5, 0.2).unwrap();
        let w = weak_coupling_roots(&p).unwrap();
        let want = [
            Complex64::new(-0.5, 0.2),
            Complex64::new(0.5, 0.2),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        for j in 0..4 {
            assert!((w[j] - want[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn weak_coupling_detects_resonance() {
        let p = ModelParams::natural(1e-3, 1.0, 1e-12).unwrap();
        assert!(matches!(weak_coupling_roots(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn strong_coupling_matches() {
        let p = ModelParams::natural(1e3, 1.0, 0.5).unwrap();
        let exact = find_roots(&p).unwrap();
        let strong = strong_coupling_roots(&p).unwrap();
        assert!(max_match_err(&strong, exact.roots(), true) < 1e-3);

        let p = ModelParams::natural(1e2, 0.3, 0.2).unwrap();
        let exact = find_roots(&p).unwrap();
        let strong = strong_coupling_roots(&p).unwrap();
        assert!(max_match_err(&strong, exact.roots(), true) < 1e-2);
        assert_eq!(strong[1], -strong[2].conj());
    }

    #[test]
    fn removable_root_at_zero_resonance() {
        let p = ModelParams::natural(1.0, 0.0, 0.5).unwrap();
        let s = find_roots(&p).unwrap();
        assert_eq!(s.active().len(), 3);
        assert!(s
            .roots()
            .iter()
            .any(|r| (r - Complex64::new(0.0, 0.5)).norm() < 1e-12));
    }

    #[test]
    fn relaxation_time_behaviour() {
        let t = |e0: f64| {
            let p = ModelParams::natural(1.0, 0.0, e0).unwrap();
            relaxation_time(&find_roots(&p).unwrap(), &p)
        };
        assert!(t(0.5).is_finite() && t(0.5) > 0.0);
        assert!(t(0.25) > t(0.5) && t(0.5) > t(1.0));
        assert!(t(1e-3) > 50.0 * t(0.5));
        let p1 = ModelParams::natural(1.0, 1.0, 0.5).unwrap();
        let p2 = p1.with_units(2.0, 1.0, 1.0).unwrap();
        let s = find_roots(&p1).unwrap();
        assert!((relaxation_time(&s, &p2) - 0.5 * relaxation_time(&s, &p1)).abs() < 1e-15);
    }

    #[test]
    fn flat_record_round_trip() {
        let p = ModelParams::natural(1.0, 0.0, 0.5).unwrap();
        let s = find_roots(&p).unwrap();
        assert_eq!(SpectralData::from_flat(&s.to_flat()), s);
    }
}
