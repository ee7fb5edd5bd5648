use std::f64::consts::PI;

use kdvlab::invariants::{
    action, actions, analyze, direct_hamiltonians, frequency_jacobian, odd_moment_probe, AnalysisConfig, Equation,
};
use kdvlab::roots::{gap_table, psi_solve, GapQuadrature};
use kdvlab::{discriminant, periodic_spectrum, Error, Potential};
use num_complex::Complex64;

/// `I_n = (1/π)∮ λΔ˙/√(Δ² − 4) dλ` on a circle around the n-th gap, by the
/// trapezoid rule with the square-root branch continued along the contour.
fn contour_action(q: &Potential, center: f64, radius: f64, points: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev: Option<Complex64> = None;
    for j in 0..points {
        let theta = 2.0 * PI * j as f64 / points as f64;
        let e = Complex64::from_polar(1.0, theta);
        let lam = center + radius * e;
        let d = discriminant(q, lam, 1e-12).unwrap();
        let mut root = (d.delta * d.delta - 4.0).sqrt();
        if let Some(p) = prev {
            if (root - p).norm() > (root + p).norm() {
                root = -root;
            }
        }
        prev = Some(root);
        let dlam = Complex64::new(0.0, radius) * e * (2.0 * PI / points as f64);
        acc += lam * d.delta_dot / root * dlam;
    }
    (acc / PI).norm()
}

#[test]
fn free_potential_has_no_actions_or_moments() {
    let an = analyze(&Potential::zero(), &AnalysisConfig::new(6)).unwrap();
    assert!(an.actions.values.iter().all(|&i| i == 0.0));
    let rep = an.frequencies();
    for n in 1..=6 {
        let k = 2.0 * PI * n as f64;
        assert_eq!(rep.omega1_star[n - 1], 0.0);
        assert!((rep.omega1[n - 1] / k.powi(3) - 1.0).abs() < 1e-15);
        assert!((rep.omega2[n - 1] / k.powi(5) - 1.0).abs() < 1e-15);
    }
    let h = an.hamiltonians();
    assert_eq!((h.h0, h.h1, h.h2, h.h2_star), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn small_gap_action_follows_the_quadratic_law() {
    let spec = periodic_spectrum(&Potential::cosines(&[(1, 0.05)]).unwrap(), 32, 1e-11).unwrap();
    let (i1, err) = action(&spec, 1, 96).unwrap();
    let g = spec.gamma(1);
    assert!((i1 / (g * g / (8.0 * PI)) - 1.0).abs() < 0.02);
    assert!(err < 1e-6 * i1);
}

#[test]
fn action_matches_contour_integral_oracle() {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.2)]).unwrap();
    let spec = periodic_spectrum(&q, 32, 1e-11).unwrap();
    for n in [1usize, 2] {
        let (i, _) = action(&spec, n, 96).unwrap();
        let oracle = contour_action(&q, spec.tau(n), 3.0, 256);
        assert!((i / oracle - 1.0).abs() < 1e-5, "n = {n}: {i} vs {oracle}");
    }
}

#[test]
fn collapsed_gap_action_is_exactly_zero() {
    let spec = periodic_spectrum(&Potential::cosines(&[(2, 0.1)]).unwrap(), 32, 1e-11).unwrap();
    assert!(!spec.is_open(1));
    assert_eq!(action(&spec, 1, 96).unwrap(), (0.0, 0.0));
    assert!(matches!(action(&spec, 0, 96), Err(Error::Validation(_))));
    assert!(matches!(action(&spec, 33, 96), Err(Error::Validation(_))));
    let v = actions(&spec, 8, 96).unwrap();
    assert!(v.values.iter().all(|&i| i >= -1e-12));
}

#[test]
fn trace_identity_for_the_mass() {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.2)]).unwrap();
    let an = analyze(&q, &AnalysisConfig::new(12)).unwrap();
    let h = an.hamiltonians();
    assert!((h.h0_from_actions / h.h0 - 1.0).abs() < 1e-5);
    assert!((h.h2_star / h.h2_star_subtracted - 1.0).abs() < 1e-4);
    assert!((h.h1_star / h.h1_star_subtracted - 1.0).abs() < 1e-5);
    assert!(!h.h1_star_flag);
}

#[test]
fn direct_hamiltonians_of_a_single_cosine() {
    // q = 2a cos(2πx): H₀ = a², H₁ = 4π²a², H₂ = 16π⁴a² + (5/2)·6a⁴ + 10·(½)∫ q q_x²
    let a = 0.3;
    let (h0, h1, h2) = direct_hamiltonians(&Potential::cosines(&[(1, a)]).unwrap());
    assert!((h0 - a * a).abs() < 1e-14);
    assert!((h1 - 4.0 * PI * PI * a * a).abs() < 1e-12);
    // ∫ q q_x² = 0 for a single cosine; ∫ q⁴ = 16a⁴·3/8
    let expect = 16.0 * PI.powi(4) * a * a + 0.5 * 5.0 * 6.0 * a.powi(4);
    assert!((h2 - expect).abs() < 1e-10 * expect);
}

#[test]
fn first_moment_equals_the_action() {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.2)]).unwrap();
    let an = analyze(&q, &AnalysisConfig::new(8)).unwrap();
    for n in an.spectrum.open_gaps().into_iter().filter(|&n| an.spectrum.gamma(n) > 1e-6) {
        assert!((an.moments.r(1, n) / an.actions.get(n) - 1.0).abs() < 1e-6, "n = {n}");
    }
    for n in 1..=8 {
        for m in [1u32, 3, 5] {
            assert!(an.moments.r(m, n) >= -1e-12);
        }
        assert_eq!(an.moments.r(2, n), 0.0);
        for k in 1..=8 {
            assert_eq!(an.moments.omega(1, n, k), 0.0);
            assert_eq!(an.moments.omega(3, n, k), 0.0);
            if !an.spectrum.is_open(k) {
                assert_eq!(an.moments.omega(2, n, k), 0.0);
                assert_eq!(an.moments.omega(4, n, k), 0.0);
            }
        }
    }
}

#[test]
fn odd_moments_vanish_without_short_circuit() {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.2)]).unwrap();
    let spec = periodic_spectrum(&q, 32, 1e-11).unwrap();
    let psi = psi_solve(&spec, 1, 32, 1e-12, 96).unwrap();
    let table = gap_table(&q, &spec, 2, &GapQuadrature::new(96), 1e-11).unwrap();
    assert!(odd_moment_probe(&spec, &psi, &table, 96).abs() < 1e-9);
}

#[test]
fn diagonal_moments_of_a_one_gap_potential() {
    let an = analyze(&Potential::cosines(&[(1, 0.02)]).unwrap(), &AnalysisConfig::new(2)).unwrap();
    let g = an.spectrum.gamma(1);
    let om2 = an.moments.omega(2, 1, 1);
    assert!((om2 / (g * g / (16.0 * PI)) - 1.0).abs() < 0.1, "{om2}");
    let om4 = an.moments.omega(4, 1, 1);
    let law = 3.0 / (16.0 * PI) * g.powi(4) / (64.0 * PI * PI);
    assert!((om4 / law - 1.0).abs() < 0.15, "{om4} vs {law}");
}

#[test]
fn small_amplitude_frequencies_follow_the_leading_terms() {
    for n in [1u32, 2] {
        let an = analyze(&Potential::cosines(&[(n, 0.02)]).unwrap(), &AnalysisConfig::new(3)).unwrap();
        let rep = an.frequencies();
        let i = rep.actions[n as usize - 1];
        let k = 2.0 * PI * n as f64;
        assert!((rep.omega1_star[n as usize - 1] / (-6.0 * i) - 1.0).abs() < 1e-3);
        assert!((rep.omega2_star[n as usize - 1] / (-20.0 * k * k * i) - 1.0).abs() < 1e-2);
    }
}

#[test]
fn mean_enters_only_through_the_shift_formulas() {
    let q = Potential::cosines(&[(1, 0.1), (2, 0.05)]).unwrap();
    let cfg = AnalysisConfig::new(4);
    let base = analyze(&q, &cfg).unwrap().frequencies();
    let c = 1.5;
    let moved = analyze(&q.with_mean(c), &cfg).unwrap().frequencies();
    for n in 1..=4 {
        let k = 2.0 * PI * n as f64;
        assert_eq!(moved.omega1_star[n - 1], base.omega1_star[n - 1]);
        assert!((moved.omega1[n - 1] - base.omega1[n - 1] - 6.0 * c * k).abs() < 1e-9 * base.omega1[n - 1]);
        let w1s = base.omega1_star[n - 1];
        let shift = 10.0 * c * k.powi(3) + 30.0 * c * c * k + 10.0 * c * w1s;
        assert!((moved.omega2[n - 1] - base.omega2[n - 1] - shift).abs() < 1e-9 * base.omega2[n - 1]);
    }
}

#[test]
fn asymptotic_kdv_frequency_stays_bounded() {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.1)]).unwrap();
    let rep = analyze(&q, &AnalysisConfig::new(12)).unwrap().frequencies();
    let v: Vec<f64> = (4..=12).map(|n| n as f64 * (rep.omega1_star[n - 1] + 6.0 * rep.actions[n - 1]).abs()).collect();
    assert!(v.iter().all(|&x| x <= 2.0 * v[0]));
    assert!(rep.warnings.is_empty());
}

#[test]
fn configuration_is_validated() {
    let mut cfg = AnalysisConfig::new(4);
    cfg.k_max = cfg.m_trunc + 1;
    assert!(matches!(analyze(&Potential::zero(), &cfg), Err(Error::Validation(_))));
    let mut cfg = AnalysisConfig::new(4);
    cfg.nodes = 2;
    assert!(cfg.validate().is_err());
    let mut cfg = AnalysisConfig::new(4);
    cfg.n_max = 0;
    assert!(cfg.validate().is_err());
    assert!(AnalysisConfig::new(4).validate().is_ok());
}

#[test]
fn jacobian_rejects_a_degenerate_family() {
    let family = |a: &[f64]| Potential::cosines(&[(1, a[0])]);
    let r = frequency_jacobian(family, &[0.05, 0.05], &[1, 2], 1e-3, Equation::Kdv, &AnalysisConfig::new(2));
    assert!(r.is_err());
    let r = frequency_jacobian(family, &[0.05], &[], 1e-3, Equation::Kdv, &AnalysisConfig::new(2));
    assert!(matches!(r, Err(Error::Validation(_))));
}

#[test]
fn jacobian_near_zero_is_minus_six() {
    let family = |a: &[f64]| Potential::cosines(&[(1, a[0]), (2, a[1])]);
    let r = frequency_jacobian(family, &[0.03, 0.03], &[1, 2], 1e-3, Equation::Kdv, &AnalysisConfig::new(2)).unwrap();
    for i in 0..2 {
        assert!((r.jacobian[i][i] + 6.0).abs() < 1e-3);
        assert!(r.jacobian[i][1 - i].abs() < 1e-3);
    }
    assert!(r.negative_definite);
    assert!(r.symmetry_defect < 1e-3);
}
