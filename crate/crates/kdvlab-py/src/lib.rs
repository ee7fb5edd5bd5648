//! Python bindings.
//!
//! Potentials are passed as the JSON wire format (a `str`, or any object
//! `json.dumps` accepts, e.g. a `dict`).  Structured results come back as
//! plain Python objects decoded from the library's deterministic JSON, so
//! large integer mode indices survive unchanged.  Invalid input raises
//! `ValueError`; numerical failures raise `kdvlab.NumericalError`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use kdvlab::bnf::{self, RationalMean};
use kdvlab::flow::{self, Kdv2Experiment, KdvExperiment};
use kdvlab::invariants::{self, AnalysisConfig, Equation};
use kdvlab::pde::{self, PdeConfig, PdeEquation};
use kdvlab::{hill, seqspace, Error, Potential};

create_exception!(kdvlab, NumericalError, PyRuntimeError, "Numerical failure of a kdvlab pipeline.");

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Validation(msg) => PyValueError::new_err(msg),
        Error::Numerical(msg) => NumericalError::new_err(msg),
    }
}

/// Decodes the deterministic JSON of `value` into Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = kdvlab::io::to_json_string(value).map_err(to_py_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn potential_from(obj: &Bound<'_, PyAny>) -> PyResult<Potential> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    kdvlab::io::parse_potential(&text).map_err(to_py_err)
}

fn equation(name: &str) -> PyResult<Equation> {
    match name {
        "kdv" => Ok(Equation::Kdv),
        "kdv2" => Ok(Equation::Kdv2),
        _ => Err(PyValueError::new_err(format!("unknown equation '{name}' (expected 'kdv' or 'kdv2')"))),
    }
}

fn pde_equation(name: &str) -> PyResult<PdeEquation> {
    match name {
        "airy" => Ok(PdeEquation::Airy),
        "kdv" => Ok(PdeEquation::Kdv),
        "kdv2" => Ok(PdeEquation::Kdv2),
        _ => Err(PyValueError::new_err(format!("unknown equation '{name}' (expected 'airy', 'kdv' or 'kdv2')"))),
    }
}

fn analysis_config(
    n_max: usize,
    m: Option<usize>,
    k: Option<usize>,
    tol: Option<f64>,
    nodes: Option<usize>,
) -> PyResult<AnalysisConfig> {
    let mut cfg = AnalysisConfig::new(n_max);
    if let Some(m) = m {
        cfg.m_trunc = m;
        cfg.k_max = cfg.k_max.min(m);
    }
    cfg.k_max = k.unwrap_or(cfg.k_max);
    cfg.tol = tol.unwrap_or(cfg.tol);
    cfg.nodes = nodes.unwrap_or(cfg.nodes);
    cfg.validate().map_err(to_py_err)?;
    Ok(cfg)
}

/// Hill discriminant `(Δ(λ), Δ˙(λ))` at a complex spectral parameter.
#[pyfunction]
#[pyo3(signature = (potential, lam, tol = hill::DEFAULT_TOL))]
fn discriminant(py: Python<'_>, potential: &Bound<'_, PyAny>, lam: Complex64, tol: f64) -> PyResult<(Complex64, Complex64)> {
    let q = potential_from(potential)?;
    let d = py.detach(|| hill::discriminant(&q, lam, tol)).map_err(to_py_err)?;
    Ok((d.delta, d.delta_dot))
}

/// Periodic and Dirichlet spectrum through index `n_max`.
#[pyfunction]
#[pyo3(signature = (potential, n_max = 8, tol = hill::DEFAULT_TOL))]
fn periodic_spectrum<'py>(py: Python<'py>, potential: &Bound<'py, PyAny>, n_max: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let q = potential_from(potential)?;
    let spec = py.detach(|| hill::periodic_spectrum(&q, n_max, tol)).map_err(to_py_err)?;
    to_py(py, &spec)
}

/// Actions `I_1, …, I_N`.
#[pyfunction]
#[pyo3(signature = (potential, n_max = 8, tol = hill::DEFAULT_TOL, nodes = kdvlab::roots::DEFAULT_NODES))]
fn actions(py: Python<'_>, potential: &Bound<'_, PyAny>, n_max: usize, tol: f64, nodes: usize) -> PyResult<Vec<f64>> {
    let q = potential_from(potential)?;
    let acts = py
        .detach(|| hill::periodic_spectrum(&q, n_max, tol).and_then(|s| invariants::actions(&s, n_max, nodes)))
        .map_err(to_py_err)?;
    Ok(acts.values)
}

/// Moment-formula frequencies `ω^(1)`, `ω^(2)` and their starred parts.
#[pyfunction]
#[pyo3(signature = (potential, n_max = 8, m = None, k = None, tol = None, nodes = None))]
fn frequencies<'py>(
    py: Python<'py>,
    potential: &Bound<'py, PyAny>,
    n_max: usize,
    m: Option<usize>,
    k: Option<usize>,
    tol: Option<f64>,
    nodes: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let q = potential_from(potential)?;
    let cfg = analysis_config(n_max, m, k, tol, nodes)?;
    let rep = py.detach(|| invariants::analyze(&q, &cfg).map(|a| a.frequencies())).map_err(to_py_err)?;
    to_py(py, &rep)
}

/// Direct and moment-route Hamiltonians.
#[pyfunction]
#[pyo3(signature = (potential, n_max = 8))]
fn hamiltonians<'py>(py: Python<'py>, potential: &Bound<'py, PyAny>, n_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let q = potential_from(potential)?;
    let cfg = analysis_config(n_max, None, None, None, None)?;
    let h = py.detach(|| invariants::analyze(&q, &cfg).map(|a| a.hamiltonians())).map_err(to_py_err)?;
    to_py(py, &h)
}

/// Quartic normal form `(H, [ω_1, …])` for the given actions.
#[pyfunction]
#[pyo3(signature = (actions, c = 0.0, equation = "kdv2"))]
fn bnf_predict(actions: Vec<f64>, c: f64, equation: &str) -> PyResult<(f64, Vec<f64>)> {
    bnf::bnf_predict(&actions, c, self::equation(equation)?).map_err(to_py_err)
}

/// `det C_A` at mean `c`.
#[pyfunction]
fn det_ca(c: f64, a: Vec<usize>) -> PyResult<f64> {
    bnf::det_ca(c, &a).map_err(to_py_err)
}

/// Means `c` at which `det C_A` vanishes, ascending.
#[pyfunction]
fn singular_set(a: Vec<usize>) -> PyResult<Vec<f64>> {
    bnf::singular_set(&a).map_err(to_py_err)
}

/// Exact resonance scan at the rational mean `p/q`.
#[pyfunction]
#[pyo3(signature = (a, p = 0, q = 1, kmax = 6, window = 40))]
fn resonance_scan<'py>(py: Python<'py>, a: Vec<usize>, p: i64, q: i64, kmax: i64, window: usize) -> PyResult<Bound<'py, PyAny>> {
    let cert = py.detach(|| bnf::resonance_scan(&a, RationalMean { p, q }, kmax, window)).map_err(to_py_err)?;
    to_py(py, &cert)
}

/// Operator-norm, product-bound and sine-product studies.
#[pyfunction]
#[pyo3(signature = (seed = 20_240_601, samples = 100))]
fn sequence_suite<'py>(py: Python<'py>, seed: u64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    let suite = py.detach(|| seqspace::sequence_suite(seed, samples)).map_err(to_py_err)?;
    to_py(py, &suite)
}

/// Non-uniform-continuity experiment: `"kdv"`, `"kdv2-hs"` or
/// `"kdv2-level-set"`, with optional overrides of the defaults.
#[pyfunction]
#[pyo3(signature = (experiment = "kdv", sigma = None, t = None, k = None, delta = None, m_values = None))]
fn continuity_experiment<'py>(
    py: Python<'py>,
    experiment: &str,
    sigma: Option<f64>,
    t: Option<f64>,
    k: Option<u32>,
    delta: Option<f64>,
    m_values: Option<Vec<u32>>,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = match experiment {
        "kdv" => {
            let d = KdvExperiment::default();
            let cfg = KdvExperiment {
                sigma: sigma.unwrap_or(d.sigma),
                t: t.unwrap_or(d.t),
                k: k.unwrap_or(d.k),
                delta: delta.or(d.delta),
                m_values: m_values.unwrap_or(d.m_values),
                base: d.base,
            };
            py.detach(|| flow::kdv_continuity_experiment(&cfg))
        }
        "kdv2-hs" | "kdv2-level-set" => {
            let mut cfg =
                if experiment == "kdv2-hs" { Kdv2Experiment::hs_default() } else { Kdv2Experiment::level_set_default() };
            cfg.sigma = sigma.unwrap_or(cfg.sigma);
            cfg.t = t.unwrap_or(cfg.t);
            cfg.k = k.unwrap_or(cfg.k);
            cfg.delta = delta.or(cfg.delta);
            if let Some(m) = m_values {
                cfg.m_values = m;
            }
            py.detach(|| flow::kdv2_continuity_experiment(&cfg))
        }
        other => return Err(PyValueError::new_err(format!("unknown experiment '{other}'"))),
    }
    .map_err(to_py_err)?;
    to_py(py, &rep)
}

/// Pseudo-spectral evolution.  Returns `(times, modes)` with `modes[j]` the
/// complex coefficients `û_0, …, û_{M/2−1}` at `times[j]`.
#[pyfunction]
#[pyo3(signature = (potential, t_final, equation = "kdv", dt = None, m = None, stride = None))]
fn evolve(
    py: Python<'_>,
    potential: &Bound<'_, PyAny>,
    t_final: f64,
    equation: &str,
    dt: Option<f64>,
    m: Option<usize>,
    stride: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let q = potential_from(potential)?;
    let eq = pde_equation(equation)?;
    let d = PdeConfig::for_equation(eq);
    let cfg = PdeConfig { dt: dt.unwrap_or(d.dt), m: m.unwrap_or(d.m), stride: stride.unwrap_or(d.stride) };
    let traj = py.detach(|| pde::evolve(&q, t_final, eq, &cfg)).map_err(to_py_err)?;
    if let Some(e) = traj.error {
        return Err(NumericalError::new_err(format!("integration stopped early ({e})")));
    }
    let times = traj.samples.iter().map(|s| s.t).collect();
    let modes = traj.samples.iter().map(|s| s.u_hat[..s.m() / 2].to_vec()).collect();
    Ok((times, modes))
}

/// Moment-route versus PDE-route frequency of mode `n`.
#[pyfunction]
#[pyo3(signature = (potential, n, equation = "kdv", t_final = None, dt = None, m = 64, stride = None))]
fn crosscheck<'py>(
    py: Python<'py>,
    potential: &Bound<'py, PyAny>,
    n: usize,
    equation: &str,
    t_final: Option<f64>,
    dt: Option<f64>,
    m: usize,
    stride: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let q = potential_from(potential)?;
    let eq = pde_equation(equation)?;
    let (t_default, stride_default) = if eq == PdeEquation::Kdv2 { (0.002, 20) } else { (0.05, 10) };
    let cfg = PdeConfig {
        dt: dt.unwrap_or(PdeConfig::for_equation(eq).dt),
        m,
        stride: stride.unwrap_or(stride_default),
    };
    let an = analysis_config(n.max(4), None, None, None, None)?;
    let rep = py.detach(|| pde::crosscheck(&q, eq, n, t_final.unwrap_or(t_default), &cfg, &an)).map_err(to_py_err)?;
    to_py(py, &rep)
}

/// The `kdvlab` Python module.
#[pymodule]
#[pyo3(name = "kdvlab")]
pub fn kdvlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(actions, m)?)?;
    m.add_function(wrap_pyfunction!(frequencies, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonians, m)?)?;
    m.add_function(wrap_pyfunction!(bnf_predict, m)?)?;
    m.add_function(wrap_pyfunction!(det_ca, m)?)?;
    m.add_function(wrap_pyfunction!(singular_set, m)?)?;
    m.add_function(wrap_pyfunction!(resonance_scan, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_suite, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(crosscheck, m)?)?;
    Ok(())
}
