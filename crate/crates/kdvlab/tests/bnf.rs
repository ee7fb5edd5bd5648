use std::f64::consts::PI;

use kdvlab::bnf::{bnf_predict, comb_identities_check, det_ca, resonance_scan, singular_set, BnfModel, RationalMean};
use kdvlab::invariants::Equation;
use kdvlab::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// `det C_A^(2)` by a dense LU determinant of the explicit matrix.
fn dense_det(c: f64, a: &[usize]) -> f64 {
    let model = BnfModel::new(c);
    DMatrix::from_fn(a.len(), a.len(), |i, j| model.c2(a[i], a[j])).determinant()
}

#[test]
fn determinant_examples() {
    assert!((det_ca(0.7, &[3]).unwrap() - 42.0).abs() < 1e-12);
    assert_eq!(det_ca(0.0, &[5]).unwrap(), 0.0);
    let v = det_ca(0.0, &[1, 2]).unwrap();
    let expect = -(160.0 * PI * PI).powi(2);
    assert!((v / expect - 1.0).abs() < 1e-14);
    for c in [1e4, -1e4] {
        assert!(det_ca(c, &[1, 2]).unwrap() > 0.0);
    }
    assert!(matches!(det_ca(0.0, &[]), Err(Error::Validation(_))));
    assert!(matches!(det_ca(0.0, &[1, 1]), Err(Error::Validation(_))));
    assert!(matches!(det_ca(0.0, &[0, 1]), Err(Error::Validation(_))));
}

#[test]
fn singular_sets_interlace_the_poles() {
    assert_eq!(singular_set(&[1]).unwrap(), vec![0.0]);
    let pole = |i: f64| -(4.0 / 3.0) * PI * PI * i * i;
    let r = singular_set(&[1, 2]).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r[0] > pole(2.0) && r[0] < pole(1.0));
    assert!(r[1] > 0.0);
    let r = singular_set(&[1, 2, 3]).unwrap();
    assert_eq!(r.len(), 3);
    assert!(r[0] > pole(3.0) && r[0] < pole(2.0));
    assert!(r[1] > pole(2.0) && r[1] < pole(1.0));
    assert!(r[2] > 0.0);
    for &c in &r {
        let scale = dense_det(c.abs() + 1.0, &[1, 2, 3]).abs().max((80.0 * PI * PI).powi(3) * 36.0);
        assert!(det_ca(c, &[1, 2, 3]).unwrap().abs() <= 1e-6 * scale);
    }
}

#[test]
fn determinant_changes_sign_exactly_at_the_singular_set() {
    let a = [1usize, 2, 4];
    let roots = singular_set(&a).unwrap();
    for &r in &roots {
        let h = 1e-6 * r.abs().max(1.0);
        let (lo, hi) = (det_ca(r - h, &a).unwrap(), det_ca(r + h, &a).unwrap());
        assert!(lo.signum() != hi.signum(), "no sign change at {r}");
    }
    // no further sign changes between consecutive roots on a fine grid
    let grid: Vec<f64> = (0..=4000).map(|j| -250.0 + j as f64 * 0.1).collect();
    let mut changes = 0;
    for w in grid.windows(2) {
        if det_ca(w[0], &a).unwrap().signum() != det_ca(w[1], &a).unwrap().signum() {
            changes += 1;
        }
    }
    let inside = roots.iter().filter(|&&r| r > -250.0 && r < 150.0).count();
    assert_eq!(changes, inside);
}

#[test]
fn normal_form_predictions() {
    let (h, w) = bnf_predict(&[0.0; 3], 0.4, Equation::Kdv2).unwrap();
    assert_eq!(h, 0.0);
    let model = BnfModel::new(0.4);
    for n in 1..=3 {
        assert_eq!(w[n - 1], model.lambda2(n));
    }
    let s = 1e-3;
    let (_, w) = bnf_predict(&[0.0, s], 0.0, Equation::Kdv).unwrap();
    let k = 4.0 * PI;
    assert!((w[1] - (k.powi(3) - 6.0 * s)).abs() < 1e-9);
    let (_, w) = bnf_predict(&[0.0, s], 0.0, Equation::Kdv2).unwrap();
    assert!((w[1] - (k.powi(5) + 20.0 * k * k * s - 20.0 * k * k * s)).abs() < 1e-6);
    assert!(bnf_predict(&[-1.0], 0.0, Equation::Kdv).is_err());
}

#[test]
fn gradient_of_the_normal_form_is_the_frequency() {
    let acts = [2e-3, 1e-3, 5e-4];
    for eq in [Equation::Kdv, Equation::Kdv2] {
        let (_, w) = bnf_predict(&acts, 0.3, eq).unwrap();
        for j in 0..3 {
            let h = 1e-7;
            let mut p = acts;
            let mut m = acts;
            p[j] += h;
            m[j] -= h;
            let fd = (bnf_predict(&p, 0.3, eq).unwrap().0 - bnf_predict(&m, 0.3, eq).unwrap().0) / (2.0 * h);
            assert!((fd - w[j]).abs() < 1e-6 * w[j].abs(), "{eq:?} j = {j}");
        }
    }
}

#[test]
fn combinatorial_identities() {
    let rep = comb_identities_check(12).unwrap();
    assert_eq!(rep.xi_zero, 0);
    assert!(rep.triples_checked > 0 && rep.quadruples_checked > 0);
    // (1, 1, −2): both sides −30; (1, 1, 1, −3): −240
    let p5 = |x: i64| x.pow(5);
    assert_eq!(p5(1) + p5(1) + p5(-2), -30);
    assert_eq!(5 * 1 * 1 * -2 * (1 + 1 + 4) / 2, -30);
    assert_eq!(p5(1) + p5(1) + p5(1) + p5(-3), -240);
    assert_eq!(5 * 2 * 2 * -2 * 6, -240);
    assert!(comb_identities_check(0).is_err());
    assert!(comb_identities_check(51).is_err());
}

#[test]
fn resonance_scan_at_zero_mean_is_clean() {
    let cert = resonance_scan(&[1, 2], RationalMean::zero(), 6, 40).unwrap();
    assert!(cert.offenders.is_empty());
    // 13² choices of k_A times 1 + 4·38 + 4·C(38, 2) choices of k_Z, minus k = 0
    assert_eq!(cert.candidates, 169 * (1 + 4 * 38 + 4 * 703) - 1);
    let json = serde_json::to_value(&cert).unwrap();
    for key in ["A", "c", "Kmax", "window", "offenders"] {
        assert!(json.get(key).is_some());
    }
    assert!(resonance_scan(&[1], RationalMean { p: 1, q: 0 }, 2, 4).is_err());
}

proptest! {
    #[test]
    fn rank_one_determinant_matches_dense(c in -200.0f64..200.0, mask in 1u32..64) {
        let a: Vec<usize> = (1..=6).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        let fast = det_ca(c, &a).unwrap();
        let dense = dense_det(c, &a);
        let scale: f64 = a.iter().map(|&i| 80.0 * PI * PI * (i * i) as f64 + 60.0 * c.abs()).product();
        prop_assert!((fast - dense).abs() <= 1e-10 * scale, "A = {:?}: {} vs {}", a, fast, dense);
    }

    #[test]
    fn c_matrix_is_symmetric(c in -10.0f64..10.0, i in 1usize..20, j in 1usize..20) {
        let m = BnfModel::new(c);
        prop_assert_eq!(m.c2(i, j), m.c2(j, i));
        prop_assert_eq!(m.c1(i, j), m.c1(j, i));
    }
}
