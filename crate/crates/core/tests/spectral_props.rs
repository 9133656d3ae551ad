use num_complex::Complex64;
use proptest::prelude::*;
use qbm_core::model::ModelParams;
use qbm_core::spectral::{find_roots, strong_coupling_roots, weak_coupling_roots};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn sum_rules_over_grid() {
    let mut worst: f64 = 0.0;
    for &e0 in &linspace(0.05, 2.0, 10) {
        for &er in &linspace(0.0, 2.0, 10) {
            for sigma in [0.1, 1.0, 5.0] {
                let p = ModelParams::natural(sigma, er, e0).unwrap();
                let s = find_roots(&p).unwrap();
                worst = worst.max(s.sum_residues().norm());
                worst = worst.max((s.first_moment() + 1.0).norm());
            }
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

proptest! {
    #[test]
    fn reconstruction(s in 0.05..5.0f64, r in 0.0..2.0f64, e in 0.05..2.0f64,
                      x in -6.0..6.0f64, y in -3.0..3.0f64) {
        let p = ModelParams::natural(s, r, e).unwrap();
        let sd = find_roots(&p).unwrap();
        let eta = Complex64::new(x, y);
        prop_assume!(sd.roots().iter().all(|z| (z - eta).norm() > 1e-2));
        let exact = 1.0 / p.shape().zeta(eta);
        prop_assert!((sd.reconstruct(eta) - exact).norm() <= 1e-10 * exact.norm());
    }

    /// The root set is closed under η ↦ -η*, with R ↦ -R*.
    #[test]
    fn reflection_closure(s in 0.05..5.0f64, r in 0.0..2.0f64, e in 0.05..2.0f64) {
        let p = ModelParams::natural(s, r, e).unwrap();
        let sd = find_roots(&p).unwrap();
        for (z, res) in sd.roots().iter().zip(sd.residues()) {
            prop_assert!(z.im > 0.0);
            let img = -z.conj();
            let k = sd.roots().iter().position(|w| (w - img).norm() <= 1e-9 * z.norm().max(1.0));
            prop_assert!(k.is_some());
            prop_assert!((sd.residues()[k.unwrap()] + res.conj()).norm() <= 1e-9 * res.norm().max(1e-3));
        }
    }
}

#[test]
fn asymptotic_regimes() {
    let p = ModelParams::natural(1e-3, 1.0, 0.5).unwrap();
    let exact = find_roots(&p).unwrap();
    let weak = weak_coupling_roots(&p).unwrap();
    for (a, b) in exact.roots().iter().zip(&weak) {
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }
    let p = ModelParams::natural(1e3, 1.0, 0.5).unwrap();
    let exact = find_roots(&p).unwrap();
    let strong = strong_coupling_roots(&p).unwrap();
    for (a, b) in exact.roots().iter().zip(&strong) {
        assert!((a - b).norm() < 1e-3 * a.norm(), "{a} vs {b}");
    }
}
