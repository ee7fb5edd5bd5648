use std::collections::BTreeMap;
use std::f64::consts::PI;

use kdvlab::flow::{
    flow_map, kdv2_continuity_experiment, kdv_continuity_experiment, BirkhoffState, FrequencyModel, Kdv2Experiment,
    KdvExperiment, StatePair, Verdict,
};
use kdvlab::invariants::Equation;
use kdvlab::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn sample_state() -> BirkhoffState {
    BirkhoffState::real(&[
        (1, Complex64::new(0.1, 0.02)),
        (2, Complex64::new(-0.03, 0.05)),
        (5, Complex64::new(0.0, 0.01)),
    ])
    .unwrap()
}

fn models() -> Vec<FrequencyModel> {
    vec![
        FrequencyModel::Kdv,
        FrequencyModel::Kdv2,
        FrequencyModel::Bnf { c: 0.5, equation: Equation::Kdv2 },
        FrequencyModel::Table { omega: [(1, 3.0), (2, -1.0)].into_iter().collect() },
    ]
}

#[test]
fn flow_at_time_zero_is_the_identity() {
    let z = sample_state();
    for m in models() {
        assert_eq!(flow_map(&z, 0.0, &m).unwrap(), z);
    }
}

#[test]
fn flow_preserves_actions_and_reality() {
    let z = sample_state();
    for m in models() {
        let w = flow_map(&z, 0.37, &m).unwrap();
        assert!(w.is_real());
        for n in [1, 2, 5] {
            assert!((w.action(n) - z.action(n)).abs() < 1e-15);
            assert!((w.get(-n) - w.get(n).conj()).norm() < 1e-15);
        }
        assert!((w.h0() - z.h0()).abs() < 1e-15);
    }
}

#[test]
fn kdv_frequencies_are_explicit() {
    let z = sample_state();
    let k = 2.0 * PI;
    let w = FrequencyModel::Kdv.omega(&z, 1).unwrap();
    assert!((w - (k.powi(3) - 6.0 * z.action(1))).abs() < 1e-12);
    assert_eq!(FrequencyModel::Kdv.omega(&z, -1).unwrap(), -w);
    let w2 = FrequencyModel::Kdv2.omega(&z, 2).unwrap();
    let k2 = 2.0 * k;
    assert!((w2 - (k2.powi(5) + 20.0 * k2 * z.h0() - 20.0 * k2 * k2 * z.action(2))).abs() < 1e-9);
    assert!(matches!(FrequencyModel::Kdv.omega(&z, 0), Err(Error::Validation(_))));
}

#[test]
fn frequency_differences_match_direct_evaluation() {
    let p = sample_state();
    let q = BirkhoffState::real(&[(1, Complex64::new(0.08, 0.0)), (2, Complex64::new(0.0, 0.06)), (7, Complex64::new(0.02, 0.0))])
        .unwrap();
    let pair = StatePair::new(p.clone(), q.clone());
    for m in [FrequencyModel::Kdv, FrequencyModel::Kdv2, FrequencyModel::Bnf { c: -0.3, equation: Equation::Kdv2 }] {
        for n in [1i128, 2, 5, 7, -2] {
            let direct = m.omega(&p, n).unwrap() - m.omega(&q, n).unwrap();
            let diff = m.omega_difference(&pair.delta_actions, n);
            assert!((direct - diff).abs() < 1e-9 * m.omega(&p, n).unwrap().abs(), "{m:?}, n = {n}");
        }
    }
}

#[test]
fn flowed_gap_matches_explicit_flow() {
    let p = sample_state();
    let q = BirkhoffState::real(&[(1, Complex64::new(0.1, 0.0)), (2, Complex64::new(-0.03, 0.05))]).unwrap();
    let pair = StatePair::new(p.clone(), q.clone());
    for t in [0.0, 0.01, 0.3] {
        let a = flow_map(&p, t, &FrequencyModel::Kdv).unwrap();
        let b = flow_map(&q, t, &FrequencyModel::Kdv).unwrap();
        for s in [-0.5, 0.0, 1.0] {
            let direct = a.distance(&b, s);
            assert!((pair.flowed_gap(t, &FrequencyModel::Kdv, s) - direct).abs() < 1e-12, "t = {t}, s = {s}");
        }
    }
    assert!((pair.gap(0.0) - p.distance(&q, 0.0)).abs() < 1e-15);
}

#[test]
fn states_validate_their_input() {
    assert!(BirkhoffState::real_amplitudes(&[(0, 1.0)]).is_err());
    assert!(BirkhoffState::real_amplitudes(&[(1, 1.0), (1, 2.0)]).is_err());
    assert!(BirkhoffState::real_amplitudes(&[(1, f64::NAN)]).is_err());
    let bad: BTreeMap<i128, Complex64> = [(1, Complex64::new(1.0, 0.0)), (-1, Complex64::new(2.0, 0.0))].into_iter().collect();
    assert!(BirkhoffState::from_map(bad.clone(), true).is_err());
    assert!(BirkhoffState::from_map(bad, false).is_ok());
    let z = sample_state();
    let text = serde_json::to_string(&z).unwrap();
    assert_eq!(serde_json::from_str::<BirkhoffState>(&text).unwrap(), z);
}

#[test]
fn kdv_experiment_separates_states_at_every_scale() {
    let rep = kdv_continuity_experiment(&KdvExperiment::default()).unwrap();
    assert!(rep.confirms(1e-3));
    assert!((rep.delta - (PI / 6.0).sqrt()).abs() < 1e-15);
    assert_eq!(rep.onset, Some(1));
    // with δ = √(π/6), the phase difference is mπ: odd m designated
    for r in &rep.rows {
        assert_eq!(r.verdict == Verdict::Pass, r.m % 2 == 1, "m = {}", r.m);
    }
    // mode indices reach 2^120, beyond what a generic JSON value holds
    let json = kdvlab::io::to_json_string(&rep).unwrap();
    assert!(json.contains(&format!("\"n_m\":{}", 1i128 << 120)));
    assert!(json.contains("\"verdict\":\"pass\""));
}

#[test]
fn kdv_experiment_row_matches_explicit_states() {
    let cfg = KdvExperiment { m_values: vec![3], ..KdvExperiment::default() };
    let rep = kdv_continuity_experiment(&cfg).unwrap();
    let row = &rep.rows[0];
    let (d, s) = (rep.delta, rep.sigma);
    let pn = d * 8f64.powf(s);
    let p = BirkhoffState::real(&[(1, Complex64::new(0.1, 0.0)), (8, Complex64::new(pn, 0.0))]).unwrap();
    let q = BirkhoffState::real(&[(1, Complex64::new(0.1, 0.0)), (8, Complex64::new(pn, d * 3f64.sqrt()))]).unwrap();
    assert!((row.input_gap - p.distance(&q, -s)).abs() < 1e-14);
    let t = rep.t;
    let out = flow_map(&p, t, &FrequencyModel::Kdv).unwrap().distance(&flow_map(&q, t, &FrequencyModel::Kdv).unwrap(), -s);
    assert!((row.output_gap - out).abs() < 1e-9, "{} vs {out}", row.output_gap);
    assert!((row.phase_separation - 2.0).abs() < 1e-12);
}

#[test]
fn zero_perturbation_gives_zero_divergence() {
    let cfg = KdvExperiment { delta: Some(0.0), m_values: vec![1, 2, 3], ..KdvExperiment::default() };
    let rep = kdv_continuity_experiment(&cfg).unwrap();
    for r in &rep.rows {
        assert_eq!((r.input_gap, r.output_gap), (0.0, 0.0));
    }
}

#[test]
fn identity_flow_gives_zero_divergence() {
    let kdv = KdvExperiment { t: 0.0, delta: Some(0.3), m_values: vec![4, 5, 6], ..KdvExperiment::default() };
    let mut hs = Kdv2Experiment::hs_default();
    hs.t = 0.0;
    hs.delta = Some(0.02);
    hs.m_values = vec![4, 5, 6];
    for rep in [kdv_continuity_experiment(&kdv).unwrap(), kdv2_continuity_experiment(&hs).unwrap()] {
        for r in &rep.rows {
            assert_eq!(r.output_gap, r.input_gap);
            assert_eq!(r.phase_separation, 0.0);
            assert_eq!(r.verdict, Verdict::Undesignated);
        }
    }
    let mut ls = Kdv2Experiment::level_set_default();
    ls.t = 0.0;
    assert!(kdv2_continuity_experiment(&ls).is_err());
}

#[test]
fn kdv_experiment_rejects_bad_parameters() {
    for cfg in [
        KdvExperiment { sigma: 0.2, ..KdvExperiment::default() },
        KdvExperiment { t: 0.0, ..KdvExperiment::default() },
        KdvExperiment { t: -1.0, delta: Some(0.1), ..KdvExperiment::default() },
        KdvExperiment { k: 0, ..KdvExperiment::default() },
        KdvExperiment { m_values: vec![], ..KdvExperiment::default() },
        KdvExperiment { m_values: vec![126], ..KdvExperiment::default() },
        KdvExperiment { delta: Some(-1.0), ..KdvExperiment::default() },
    ] {
        assert!(matches!(kdv_continuity_experiment(&cfg), Err(Error::Validation(_))));
    }
}

#[test]
fn kdv2_experiments_confirm() {
    let hs = kdv2_continuity_experiment(&Kdv2Experiment::hs_default()).unwrap();
    assert!(hs.confirms(1e-3));
    assert!((hs.delta - 1.0 / (160.0 * PI).sqrt()).abs() < 1e-15);
    let ls = kdv2_continuity_experiment(&Kdv2Experiment::level_set_default()).unwrap();
    assert!(ls.confirms(1e-3));
    assert_eq!(ls.epsilon, Some(0.1));
    // the constructed states lie on the level set of H₀ of the base state
    assert!(ls.h0_defect.unwrap() < 1e-12, "{:?}", ls.h0_defect);
}

#[test]
fn kdv2_experiments_reject_bad_parameters() {
    let mut cfg = Kdv2Experiment::hs_default();
    cfg.sigma = 0.9;
    assert!(kdv2_continuity_experiment(&cfg).is_err());
    let mut cfg = Kdv2Experiment::hs_default();
    cfg.n = 1;
    assert!(kdv2_continuity_experiment(&cfg).is_err());
    let mut cfg = Kdv2Experiment::level_set_default();
    cfg.k = 1;
    assert!(kdv2_continuity_experiment(&cfg).is_err());
    let mut cfg = Kdv2Experiment::level_set_default();
    cfg.sigma = 1.0;
    assert!(kdv2_continuity_experiment(&cfg).is_err());
}

fn state_strategy() -> impl Strategy<Value = BirkhoffState> {
    prop::collection::btree_map(1i128..12, (-0.2f64..0.2, -0.2f64..0.2), 1..5).prop_map(|m| {
        let v: Vec<(i128, Complex64)> = m.into_iter().map(|(n, (a, b))| (n, Complex64::new(a, b))).collect();
        BirkhoffState::real(&v).unwrap()
    })
}

proptest! {
    #[test]
    fn flow_is_a_group(z in state_strategy(), s in -0.05f64..0.05, t in -0.05f64..0.05, which in 0usize..3) {
        let model = models().swap_remove(which);
        let two_step = flow_map(&flow_map(&z, t, &model).unwrap(), s, &model).unwrap();
        let one_step = flow_map(&z, s + t, &model).unwrap();
        // phases of size |ω|·|t| carry rounding of that relative size
        let w_max = z.positive_support().iter().map(|&n| model.omega(&z, n).unwrap().abs()).fold(0.0, f64::max);
        let tol = 8.0 * f64::EPSILON * w_max * (s.abs() + t.abs()) * z.norm(0.0) + 1e-15;
        prop_assert!(two_step.distance(&one_step, 0.0) <= tol);
        let back = flow_map(&flow_map(&z, t, &model).unwrap(), -t, &model).unwrap();
        prop_assert!(back.distance(&z, 0.0) < 1e-12);
    }

    #[test]
    fn flow_is_an_isometry_of_each_mode(z in state_strategy(), t in -1.0f64..1.0) {
        let w = flow_map(&z, t, &FrequencyModel::Kdv).unwrap();
        for s in [-1.0, 0.0, 2.0] {
            prop_assert!((w.norm(s) - z.norm(s)).abs() <= 1e-14 * z.norm(s).max(1.0));
        }
    }
}
