use std::f64::consts::PI;

use kdvlab::io::{format_float, to_json_string, to_json_string_pretty};
use kdvlab::{Error, Potential};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn single_cosine_is_mirrored() {
    let q = Potential::new(&[(1, Complex64::new(0.1, 0.0))], 0.0).unwrap();
    assert_eq!(q.coeff(-1), Complex64::new(0.1, 0.0));
    for x in [0.0, 0.1, 0.37, 0.5] {
        assert!((q.evaluate(x) - 0.2 * (2.0 * PI * x).cos()).abs() < 1e-15);
    }
    assert_eq!(q, Potential::cosines(&[(1, 0.1)]).unwrap());
}

#[test]
fn complex_coefficients_give_a_real_function() {
    let q = Potential::new(&[(1, Complex64::new(0.1, 0.0)), (3, Complex64::new(0.0, 0.05))], 0.0).unwrap();
    for j in 0..64 {
        let v = q.evaluate_complex(j as f64 / 64.0);
        assert!(v.im.abs() <= 1e-15);
        // 0.05i e^{6πix} + conj = −0.1 sin 6πx
        let x = j as f64 / 64.0;
        let expect = 0.2 * (2.0 * PI * x).cos() - 0.1 * (6.0 * PI * x).sin();
        assert!((v.re - expect).abs() < 1e-15);
    }
    assert_eq!(q.coeff(-3), Complex64::new(0.0, -0.05));
    assert_eq!(q.max_mode(), 3);
}

#[test]
fn negative_modes_are_read_as_conjugates() {
    let a = Potential::new(&[(-2, Complex64::new(0.1, 0.3))], 1.0).unwrap();
    assert_eq!(a.coeff(2), Complex64::new(0.1, -0.3));
    assert_eq!(a.coeff(0), Complex64::new(1.0, 0.0));
}

#[test]
fn invalid_inputs_are_rejected() {
    let one = Complex64::new(1.0, 0.0);
    assert!(matches!(Potential::new(&[(0, one)], 0.0), Err(Error::Validation(_))));
    assert!(matches!(Potential::new(&[(1, one), (-1, one)], 0.0), Err(Error::Validation(_))));
    assert!(matches!(Potential::new(&[(1, Complex64::new(f64::NAN, 0.0))], 0.0), Err(Error::Validation(_))));
    assert!(matches!(Potential::new(&[], f64::INFINITY), Err(Error::Validation(_))));
    assert!(serde_json::from_str::<Potential>(r#"{"mean": 0, "modes": [{"n": 0, "re": 1, "im": 0}]}"#).is_err());
}

#[test]
fn json_round_trip() {
    let text = r#"{"mean": 0.5, "modes": [{"n": 1, "re": 0.1, "im": 0.0}, {"n": 2, "re": 0.0, "im": -0.2}]}"#;
    let q: Potential = serde_json::from_str(text).unwrap();
    assert_eq!(q.mean(), 0.5);
    assert_eq!(q.coeff(2), Complex64::new(0.0, -0.2));
    let back: Potential = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
    assert_eq!(back, q);
    // modes default to empty
    assert_eq!(serde_json::from_str::<Potential>(r#"{"mean": 2}"#).unwrap(), Potential::constant(2.0));
}

#[test]
fn derivatives_and_evaluator_agree_with_direct_sums() {
    let q = Potential::new(&[(1, Complex64::new(0.2, -0.1)), (4, Complex64::new(0.03, 0.07))], -0.4).unwrap();
    let ev = q.evaluator();
    for j in 0..17 {
        let x = j as f64 / 17.0;
        let [v, d1, d2] = q.evaluate_derivatives(x);
        assert!((v - q.evaluate(x)).abs() < 1e-14);
        assert!((ev.eval(x) - v).abs() < 1e-14);
        let h = 1e-5;
        assert!((d1 - (q.evaluate(x + h) - q.evaluate(x - h)) / (2.0 * h)).abs() < 1e-7);
        assert!((d2 - (q.evaluate(x + h) - 2.0 * v + q.evaluate(x - h)) / (h * h)).abs() < 1e-3);
    }
}

#[test]
fn norms_and_helpers() {
    let q = Potential::cosines(&[(1, 0.1), (2, -0.2)]).unwrap().with_mean(-1.0);
    assert!((q.l1_oscillation() - 0.6).abs() < 1e-15);
    assert!((q.l1_norm() - 1.6).abs() < 1e-15);
    assert!(q.grid_min(256) >= -1.0 - q.l1_oscillation());
    assert_eq!(q.zero_mean().mean(), 0.0);
    assert_eq!(q.scaled(2.0).coeff(2), Complex64::new(-0.4, 0.0));
    assert!(Potential::constant(3.0).is_constant());
    let r = Potential::from_positive_modes(0.0, &[Complex64::new(1e-20, 0.0), Complex64::new(0.5, 0.0)], 1e-15).unwrap();
    assert_eq!(r.modes().collect::<Vec<_>>(), vec![(2, Complex64::new(0.5, 0.0))]);
}

#[test]
fn fixed_precision_output() {
    assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    assert_eq!(format_float(f64::NAN), "nan");
    let q = Potential::cosines(&[(1, 0.1)]).unwrap();
    let s = to_json_string(&q).unwrap();
    assert_eq!(s, r#"{"mean":0.0000000000000000e0,"modes":[{"n":1,"re":1.0000000000000001e-1,"im":0.0000000000000000e0}]}"#);
    assert_eq!(to_json_string(&[f64::INFINITY]).unwrap(), "[null]");
    let pretty = to_json_string_pretty(&q).unwrap();
    assert!(pretty.contains('\n'));
    let a: serde_json::Value = serde_json::from_str(&s).unwrap();
    let b: serde_json::Value = serde_json::from_str(&pretty).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn output_floats_round_trip_exactly(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        let s = to_json_string(&v).unwrap();
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn potentials_are_real(re in -1.0f64..1.0, im in -1.0f64..1.0, n in 1i64..20, x in 0.0f64..1.0) {
        let q = Potential::new(&[(n, Complex64::new(re, im))], 0.0).unwrap();
        prop_assert!(q.evaluate_complex(x).im.abs() <= 1e-15);
    }
}
