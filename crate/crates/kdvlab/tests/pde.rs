use std::f64::consts::PI;

use kdvlab::pde::{
    evolve, isospectral_drift, measure_mode_frequency, one_smoothing_gap, GridState, Integrator, PdeConfig,
    PdeEquation,
};
use kdvlab::{Error, Potential};
use num_complex::Complex64;

fn two_mode(a: f64) -> Potential {
    Potential::new(&[(1, Complex64::new(a, 0.0)), (2, Complex64::new(0.0, a / 2.0))], 0.0).unwrap()
}

fn max_mode_error(a: &GridState, b: &GridState) -> f64 {
    a.u_hat.iter().zip(&b.u_hat).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn airy_flow_is_exact() {
    let q = two_mode(0.1);
    let cfg = PdeConfig { dt: 1e-4, m: 32, stride: 1 };
    let t = 0.01;
    let traj = evolve(&q, t, PdeEquation::Airy, &cfg).unwrap();
    let last = traj.samples.last().unwrap();
    assert_eq!(last.t, t);
    for n in 1..=2i64 {
        let k = 2.0 * PI * n as f64;
        let exact = q.coeff(n) * Complex64::new(0.0, k.powi(3) * t).exp();
        assert!((last.mode(n) - exact).norm() < 1e-12, "n = {n}");
    }
    for n in 1..=2 {
        let fit = measure_mode_frequency(&traj, n, (0.0, t)).unwrap();
        let w = (2.0 * PI * n as f64).powi(3);
        assert!((fit.omega / w - 1.0).abs() < 1e-10, "n = {n}: {}", fit.omega);
    }
}

#[test]
fn kdv_conserves_mass_and_energy() {
    let traj = evolve(&two_mode(0.05), 0.1, PdeEquation::Kdv, &PdeConfig::for_equation(PdeEquation::Kdv)).unwrap();
    assert!(traj.error.is_none());
    let drift = traj.hamiltonian_drift();
    assert!(drift[0] <= 1e-8 && drift[1] <= 1e-8, "{drift:?}");
    for s in &traj.samples {
        assert!(s.reality_defect() <= 1e-13);
        assert_eq!(s.u_hat[0], traj.samples[0].u_hat[0]);
    }
}

#[test]
fn kdv2_conserves_mass() {
    let cfg = PdeConfig { stride: 1000, ..PdeConfig::for_equation(PdeEquation::Kdv2) };
    let traj = evolve(&two_mode(0.05), 0.01, PdeEquation::Kdv2, &cfg).unwrap();
    let drift = traj.hamiltonian_drift();
    assert!(drift[0] <= 1e-7, "{drift:?}");
    assert!(traj.samples.iter().all(|s| s.reality_defect() <= 1e-13));
}

#[test]
fn kdv_is_fourth_order_in_time() {
    let q = two_mode(0.1);
    let t = 0.01;
    let run = |dt: f64| {
        let cfg = PdeConfig { dt, m: 64, stride: usize::MAX };
        evolve(&q, t, PdeEquation::Kdv, &cfg).unwrap().samples.pop().unwrap()
    };
    let reference = run(2.5e-5);
    let e1 = max_mode_error(&run(4e-4), &reference);
    let e2 = max_mode_error(&run(2e-4), &reference);
    assert!(e1 / e2 >= 8.0, "{e1} / {e2}");
}

#[test]
fn isospectral_drift_budgets() {
    let q0 = Potential::zero();
    let airy = evolve(&q0, 0.01, PdeEquation::Airy, &PdeConfig { dt: 1e-3, m: 32, stride: 1 }).unwrap();
    assert_eq!(isospectral_drift(&airy, &[1, 2], 1, 1e-11).unwrap().max_drift, 0.0);

    let kdv = evolve(&Potential::cosines(&[(1, 0.1)]).unwrap(), 0.05, PdeEquation::Kdv, &PdeConfig {
        stride: 500,
        ..PdeConfig::for_equation(PdeEquation::Kdv)
    })
    .unwrap();
    let rep = isospectral_drift(&kdv, &[1, 2], 1, 1e-11).unwrap();
    assert!(rep.max_drift <= 1e-6 && !rep.partial, "{rep:?}");

    let kdv2 = evolve(&Potential::cosines(&[(1, 0.05)]).unwrap(), 0.005, PdeEquation::Kdv2, &PdeConfig {
        stride: 20_000,
        ..PdeConfig::for_equation(PdeEquation::Kdv2)
    })
    .unwrap();
    let rep = isospectral_drift(&kdv2, &[1, 2], 1, 1e-11).unwrap();
    assert!(rep.max_drift <= 1e-5 && !rep.partial, "{rep:?}");
    assert!(isospectral_drift(&kdv2, &[0], 1, 1e-11).is_err());
}

#[test]
fn free_state_has_no_smoothing_gap() {
    let cfg = PdeConfig { dt: 1e-4, m: 32, stride: 1 };
    let rep = one_smoothing_gap(&Potential::zero(), &[0.0, 0.01, 0.02], PdeEquation::Kdv, &cfg).unwrap();
    assert!(rep.rows.iter().all(|r| r.gap == 0.0));
    assert!(one_smoothing_gap(&Potential::zero(), &[0.02, 0.01], PdeEquation::Kdv, &cfg).is_err());
    assert!(one_smoothing_gap(&Potential::zero(), &[0.01], PdeEquation::Airy, &cfg).is_err());
}

#[test]
fn frequency_fit_detects_aliasing() {
    let cfg = PdeConfig { dt: 1e-4, m: 32, stride: 100 };
    let traj = evolve(&two_mode(0.1), 0.05, PdeEquation::Airy, &cfg).unwrap();
    assert!(matches!(measure_mode_frequency(&traj, 2, (0.0, 0.05)), Err(Error::Validation(_))));
    let free = evolve(&Potential::cosines(&[(1, 0.1)]).unwrap(), 1e-3, PdeEquation::Airy, &PdeConfig {
        dt: 1e-4,
        m: 32,
        stride: 1,
    })
    .unwrap();
    assert!(matches!(measure_mode_frequency(&free, 2, (0.0, 1e-3)), Err(Error::Numerical(_))));
}

#[test]
fn configuration_parsing_and_validation() {
    let cfg = PdeConfig::parse("dt = 1e-6\nM = 64\nstride = 5 # comment\n").unwrap();
    assert_eq!(cfg, PdeConfig { dt: 1e-6, m: 64, stride: 5 });
    assert!(PdeConfig::parse("dt = 1e-6\nM = 60\nstride = 1").is_err());
    assert!(PdeConfig::parse("dt = -1.0\nM = 64\nstride = 1").is_err());
    assert!(PdeConfig::parse("dt = 1e-6\nM = 64\nstride = 0").is_err());
    assert!(PdeConfig::parse("dt = 1e-6\nM = 64\nstride = 1\nextra = 2").is_err());
    assert!(PdeConfig::for_equation(PdeEquation::Kdv2).validate().is_ok());
    // modes beyond M/3 are not resolved by the dealiased grid
    assert!(GridState::from_potential(&Potential::cosines(&[(11, 0.1)]).unwrap(), 32).is_err());
    assert!(evolve(&Potential::zero(), -1.0, PdeEquation::Kdv, &PdeConfig::for_equation(PdeEquation::Kdv)).is_err());
}

#[test]
fn json_lines_carry_nonnegative_modes() {
    let cfg = PdeConfig { dt: 1e-4, m: 16, stride: 1 };
    let traj = evolve(&two_mode(0.1), 2e-4, PdeEquation::Kdv, &cfg).unwrap();
    let mut buf = Vec::new();
    traj.write_json_lines(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["M"], 16);
    assert_eq!(v["re"].as_array().unwrap().len(), 8);
    assert_eq!(v["re"][1].as_f64().unwrap(), 0.1);
}

#[test]
fn single_step_of_zero_state_stays_zero() {
    let mut s = GridState::from_potential(&Potential::constant(0.5), 16).unwrap();
    let mut integ = Integrator::new(PdeEquation::Kdv2, 16);
    integ.step(&mut s, 1e-3).unwrap();
    assert_eq!(s.mode(0), Complex64::new(0.5, 0.0));
    assert!((1..8).all(|n| s.mode(n) == Complex64::default()));
}
