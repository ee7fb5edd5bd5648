//! Frequency flows on Birkhoff coordinates and the non-uniform-continuity
//! experiments for the KdV and KdV2 flow maps.
//!
//! A frequency flow rotates every coordinate by its own frequency,
//! `φ_n^t(z) = e^{iω_n(z)t} z_n` with `ω_{−n} = −ω_n`.  Since the
//! frequencies depend on `z` only through the actions, the flow preserves
//! every `|z_n|` and has the group property.
//!
//! The experiments compare two nearby states `p`, `q` whose high mode
//! `n_m = 2^m` carries slightly different actions.  The difference
//! `φ^t p − φ^t q` only depends on frequency *differences*, so gaps are
//! evaluated as `|p_n − q_n e^{−iΔω_n t}|`; the huge common phases
//! `(2n_mπ)^{3,5}t` never have to be formed in floating point, and the
//! constructions supply `p − q` and `I(p) − I(q)` in closed form.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnf::bnf_predict;
use crate::error::{Error, Result};
use crate::invariants::Equation;

/// Largest admissible exponent `m` so that `2^m` fits the mode index type.
pub const MAX_EXPONENT: u32 = 125;

/// `⟨n⟩ = 1 + |n|` for wide mode indices.
pub fn bracket(n: i128) -> f64 {
    1.0 + n.unsigned_abs() as f64
}

/// One Birkhoff coordinate `z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub n: i128,
    pub re: f64,
    pub im: f64,
}

/// Finitely supported sequence `(z_n)_{n ∈ ℤ∖{0}}`.
///
/// With the reality flag set the state satisfies `z_{−n} = conj(z_n)` and
/// the actions `I_n = z_n z_{−n} = |z_n|²` are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffState {
    modes: BTreeMap<i128, Complex64>,
    real: bool,
}

#[derive(Serialize, Deserialize)]
struct BirkhoffStateJson {
    real: bool,
    modes: Vec<Coordinate>,
}

impl Serialize for BirkhoffState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BirkhoffStateJson {
            real: self.real,
            modes: self.modes.iter().map(|(&n, v)| Coordinate { n, re: v.re, im: v.im }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BirkhoffState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BirkhoffStateJson::deserialize(d)?;
        let map = j.modes.iter().map(|c| (c.n, Complex64::new(c.re, c.im))).collect();
        BirkhoffState::from_map(map, j.real).map_err(serde::de::Error::custom)
    }
}

impl BirkhoffState {
    /// Real state from its positive modes; `z_{−n} = conj(z_n)` is implied.
    pub fn real(positive: &[(i128, Complex64)]) -> Result<Self> {
        let mut modes = BTreeMap::new();
        for &(n, v) in positive {
            if n <= 0 {
                return Err(Error::validation(format!("mode index {n} must be positive")));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::validation(format!("coordinate z_{n} is not finite")));
            }
            if modes.insert(n, v).is_some() {
                return Err(Error::validation(format!("duplicate mode {n}")));
            }
            modes.insert(-n, v.conj());
        }
        Ok(BirkhoffState { modes, real: true })
    }

    /// Real state with real positive coordinates `z_{±n} = a`.
    pub fn real_amplitudes(positive: &[(i128, f64)]) -> Result<Self> {
        let v: Vec<_> = positive.iter().map(|&(n, a)| (n, Complex64::new(a, 0.0))).collect();
        BirkhoffState::real(&v)
    }

    /// General state; with `real` set the reality condition is verified.
    pub fn from_map(modes: BTreeMap<i128, Complex64>, real: bool) -> Result<Self> {
        if modes.contains_key(&0) {
            return Err(Error::validation("Birkhoff coordinates are indexed by n ≠ 0"));
        }
        if modes.values().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::validation("coordinates must be finite"));
        }
        let state = BirkhoffState { modes, real };
        if real {
            for (&n, &v) in &state.modes {
                if state.get(-n) != v.conj() {
                    return Err(Error::validation(format!("reality violated at mode {n}")));
                }
            }
        }
        Ok(state)
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn get(&self, n: i128) -> Complex64 {
        self.modes.get(&n).copied().unwrap_or_default()
    }

    /// Stored `(n, z_n)` pairs in increasing `n`.
    pub fn iter(&self) -> impl Iterator<Item = (i128, Complex64)> + '_ {
        self.modes.iter().map(|(&n, &v)| (n, v))
    }

    /// Positive indices `n` with `z_n` or `z_{−n}` stored.
    pub fn positive_support(&self) -> Vec<i128> {
        let mut v: Vec<i128> = self.modes.keys().map(|n| n.abs()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn max_mode(&self) -> i128 {
        self.modes.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    /// `I_n = Re(z_n z_{−n})` (exactly `|z_n|²` for real states).
    pub fn action(&self, n: i128) -> f64 {
        if self.real {
            self.get(n).norm_sqr()
        } else {
            (self.get(n) * self.get(-n)).re
        }
    }

    /// `H₀ = Σ_{n≥1} 2nπ I_n`.
    pub fn h0(&self) -> f64 {
        self.positive_support().iter().map(|&n| 2.0 * PI * n as f64 * self.action(n)).sum()
    }

    /// `‖z‖_{h^s} = (Σ_n ⟨n⟩^{2s}|z_n|²)^{1/2}`.
    pub fn norm(&self, s: f64) -> f64 {
        self.iter().map(|(n, v)| bracket(n).powf(2.0 * s) * v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖z − w‖_{h^s}`.
    pub fn distance(&self, other: &BirkhoffState, s: f64) -> f64 {
        let mut keys: Vec<i128> = self.modes.keys().chain(other.modes.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.iter()
            .map(|&n| bracket(n).powf(2.0 * s) * (self.get(n) - other.get(n)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Frequency functional driving a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FrequencyModel {
    /// `ω_n = (2nπ)³ − 6I_n`.
    Kdv,
    /// `ω_n = (2nπ)⁵ + 40nπH₀ − 80n²π²I_n`.
    Kdv2,
    /// Gradient of the quartic normal form at mean `c`.
    Bnf { c: f64, equation: Equation },
    /// State-independent user table `ω_n` (missing modes rotate with 0).
    Table { omega: BTreeMap<i128, f64> },
}

impl FrequencyModel {
    /// `ω_n(z)` for `n ≥ 1`; negative `n` uses `ω_{−n} = −ω_n`.
    pub fn omega(&self, z: &BirkhoffState, n: i128) -> Result<f64> {
        if n < 0 {
            return Ok(-self.omega(z, -n)?);
        }
        if n == 0 {
            return Err(Error::validation("frequencies are indexed by n ≠ 0"));
        }
        let k = 2.0 * PI * n as f64;
        Ok(match self {
            FrequencyModel::Kdv => k.powi(3) - 6.0 * z.action(n),
            FrequencyModel::Kdv2 => k.powi(5) + 20.0 * k * z.h0() - 20.0 * k * k * z.action(n),
            FrequencyModel::Bnf { c, equation } => {
                let n_idx = usize::try_from(n)
                    .ok()
                    .filter(|&v| v <= 1 << 20)
                    .ok_or_else(|| Error::validation("normal-form model supports modes up to 2^20"))?;
                let top = (z.max_mode() as usize).max(n_idx);
                let actions: Vec<f64> = (1..=top).map(|j| z.action(j as i128)).collect();
                bnf_predict(&actions, *c, *equation)?.1[n_idx - 1]
            }
            FrequencyModel::Table { omega } => omega.get(&n).copied().unwrap_or(0.0),
        })
    }

    /// `ω_n(p) − ω_n(q)` from the action differences `ΔI_j = I_j(p) − I_j(q)`
    /// (positive indices only).  The models are affine in the actions, so
    /// this is exact and avoids forming the large linear parts.
    pub fn omega_difference(&self, delta_actions: &BTreeMap<i128, f64>, n: i128) -> f64 {
        if n < 0 {
            return -self.omega_difference(delta_actions, -n);
        }
        let k = 2.0 * PI * n as f64;
        let di = delta_actions.get(&n).copied().unwrap_or(0.0);
        let dh0 = || delta_actions.iter().map(|(&j, &d)| 2.0 * PI * j as f64 * d).sum::<f64>();
        match self {
            FrequencyModel::Kdv => -6.0 * di,
            FrequencyModel::Kdv2 => 20.0 * k * dh0() - 20.0 * k * k * di,
            FrequencyModel::Bnf { c, equation } => match equation {
                Equation::Kdv => -6.0 * di,
                Equation::Kdv2 => 20.0 * k * dh0() - 20.0 * k * k * di - 60.0 * c * di,
            },
            FrequencyModel::Table { .. } => 0.0,
        }
    }
}

/// `φ^t(z)`: every coordinate rotated by `e^{iω_n(z)t}`.
pub fn flow_map(z: &BirkhoffState, t: f64, model: &FrequencyModel) -> Result<BirkhoffState> {
    let mut modes = BTreeMap::new();
    for (n, v) in z.iter() {
        let w = model.omega(z, n)?;
        modes.insert(n, v * Complex64::from_polar(1.0, w * t));
    }
    Ok(BirkhoffState { modes, real: z.real })
}

/// Two states together with their exact coordinate and action differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatePair {
    pub p: BirkhoffState,
    pub q: BirkhoffState,
    /// `p − q` per mode.
    pub diff: BTreeMap<i128, Complex64>,
    /// `I_n(p) − I_n(q)` for positive `n`.
    pub delta_actions: BTreeMap<i128, f64>,
}

impl StatePair {
    /// Pair with differences formed numerically.
    pub fn new(p: BirkhoffState, q: BirkhoffState) -> Self {
        let mut keys: Vec<i128> = p.modes.keys().chain(q.modes.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        let diff = keys.iter().map(|&n| (n, p.get(n) - q.get(n))).collect();
        let delta_actions = keys
            .iter()
            .filter(|&&n| n > 0)
            .map(|&n| (n, p.action(n) - q.action(n)))
            .collect();
        StatePair { p, q, diff, delta_actions }
    }

    /// `‖p − q‖_{h^s}`.
    pub fn gap(&self, s: f64) -> f64 {
        self.diff.iter().map(|(&n, d)| bracket(n).powf(2.0 * s) * d.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖φ^t p − φ^t q‖_{h^s}` via `|(p_n − q_n) + q_n(1 − e^{−iΔω_n t})|`.
    pub fn flowed_gap(&self, t: f64, model: &FrequencyModel, s: f64) -> f64 {
        self.diff
            .iter()
            .map(|(&n, &d)| {
                let dw = model.omega_difference(&self.delta_actions, n);
                let rot = 1.0 - Complex64::from_polar(1.0, -dw * t);
                bracket(n).powf(2.0 * s) * (d + self.q.get(n) * rot).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `|e^{iΔω_n t} − 1|` at mode `n`.
    pub fn phase_separation(&self, t: f64, model: &FrequencyModel, n: i128) -> f64 {
        let dw = model.omega_difference(&self.delta_actions, n);
        (Complex64::from_polar(1.0, dw * t) - 1.0).norm()
    }
}

/// Outcome of one row of a continuity experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Phase separation reached and the output gap clears the threshold.
    Pass,
    /// Phase separation reached but the output gap stays below threshold.
    Fail,
    /// The frequency difference does not separate the phases at this `m`.
    Undesignated,
    /// `2^m` does not exceed the base support; the construction is void.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Undesignated => "undesignated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub m: u32,
    pub n_m: i128,
    pub input_gap: f64,
    pub output_gap: f64,
    /// `|e^{i(ω_{n_m}(p) − ω_{n_m}(q))t} − 1|`.
    pub phase_separation: f64,
    /// `m = k(2j + 1)` for some `j ≥ 0`.
    pub odd_multiple_of_k: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub experiment: String,
    pub sigma: f64,
    pub t: f64,
    pub k: u32,
    pub delta: f64,
    /// `ε = |z°_N|` for the level-set construction.
    pub epsilon: Option<f64>,
    /// Weight exponent of the `h^s` norm used for both gaps.
    pub norm_exponent: f64,
    /// Lower bound expected for the output gap on designated rows.
    pub threshold: f64,
    pub model: FrequencyModel,
    pub base: BirkhoffState,
    pub rows: Vec<ContinuityRow>,
    /// Smallest designated `m` from which every designated row has
    /// `input_gap < output_gap`.
    pub onset: Option<u32>,
    /// Largest `|H₀(·) − H₀(z°)|` over the constructed states (level-set
    /// construction only).
    pub h0_defect: Option<f64>,
}

impl ContinuityReport {
    /// Designated rows whose input gap is below `input_tol`.
    pub fn designated_below(&self, input_tol: f64) -> impl Iterator<Item = &ContinuityRow> {
        self.rows.iter().filter(move |r| {
            matches!(r.verdict, Verdict::Pass | Verdict::Fail) && r.input_gap < input_tol
        })
    }

    /// Every designated row with input gap below `input_tol` passes, and there
    /// is at least one such row.
    pub fn confirms(&self, input_tol: f64) -> bool {
        let mut any = false;
        for r in self.designated_below(input_tol) {
            any = true;
            if r.verdict != Verdict::Pass {
                return false;
            }
        }
        any
    }
}

fn check_exponents(m_values: &[u32]) -> Result<()> {
    if m_values.is_empty() {
        return Err(Error::validation("need at least one exponent m"));
    }
    if let Some(&m) = m_values.iter().find(|&&m| m == 0 || m > MAX_EXPONENT) {
        return Err(Error::validation(format!("exponent m = {m} outside 1..={MAX_EXPONENT}")));
    }
    Ok(())
}

/// `t ≥ 0` and `k ≥ 1`; `t = 0` (identity flow) needs an explicit `δ`
/// since the default `δ` scales like `t^{−1/2}`.
fn check_time(t: f64, k: u32, delta: Option<f64>) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) || k == 0 {
        return Err(Error::validation("experiment needs finite t ≥ 0 and k ≥ 1"));
    }
    if t == 0.0 && delta.is_none() {
        return Err(Error::validation("t = 0 requires an explicit δ"));
    }
    Ok(())
}

fn odd_multiple(m: u32, k: u32) -> bool {
    m % k == 0 && (m / k) % 2 == 1
}

fn onset(rows: &[ContinuityRow]) -> Option<u32> {
    let designated: Vec<&ContinuityRow> =
        rows.iter().filter(|r| matches!(r.verdict, Verdict::Pass | Verdict::Fail)).collect();
    let mut start = None;
    for r in designated.iter().rev() {
        if r.input_gap < r.output_gap {
            start = Some(r.m);
        } else {
            break;
        }
    }
    start
}

#[allow(clippy::too_many_arguments)]
fn run_rows<B>(
    m_values: &[u32],
    n_base: i128,
    t: f64,
    s: f64,
    threshold: f64,
    k: u32,
    model: &FrequencyModel,
    build: B,
) -> Vec<ContinuityRow>
where
    B: Fn(u32, i128) -> StatePair + Sync,
{
    let mut rows: Vec<ContinuityRow> = m_values
        .par_iter()
        .map(|&m| {
            let n_m = 1i128 << m;
            if n_m <= n_base {
                return ContinuityRow {
                    m,
                    n_m,
                    input_gap: f64::NAN,
                    output_gap: f64::NAN,
                    phase_separation: f64::NAN,
                    odd_multiple_of_k: odd_multiple(m, k),
                    verdict: Verdict::Inconclusive,
                };
            }
            let pair = build(m, n_m);
            let input_gap = pair.gap(s);
            let output_gap = pair.flowed_gap(t, model, s);
            let phase_separation = pair.phase_separation(t, model, n_m);
            let verdict = if phase_separation < 1.0 {
                Verdict::Undesignated
            } else if output_gap >= threshold {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            ContinuityRow {
                m,
                n_m,
                input_gap,
                output_gap,
                phase_separation,
                odd_multiple_of_k: odd_multiple(m, k),
                verdict,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.m);
    rows
}

/// Parameters of the KdV experiment on `h^{−σ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdvExperiment {
    /// `σ ∈ (0, 1/6]`.
    pub sigma: f64,
    pub t: f64,
    /// Integer `k ≥ 1` fixing the default `δ = √(π/(6tk))`.
    pub k: u32,
    /// Overrides the default `δ`.
    pub delta: Option<f64>,
    /// Base state `z°`; the constructions leave modes `n ≤ N` untouched
    /// with `N = max support`.
    pub base: BirkhoffState,
    pub m_values: Vec<u32>,
}

impl Default for KdvExperiment {
    fn default() -> Self {
        KdvExperiment {
            sigma: 0.125,
            t: 1.0,
            k: 1,
            delta: None,
            base: BirkhoffState::real_amplitudes(&[(1, 0.1)]).expect("valid base"),
            m_values: (1..=120).collect(),
        }
    }
}

/// `p_{±n_m} = δn_m^σ`, `q_{±n_m} = p_{±n_m} ± iδ√m`, evolved with the
/// `−6I_n` frequency model; output gaps compared with `δ/2`.
pub fn kdv_continuity_experiment(cfg: &KdvExperiment) -> Result<ContinuityReport> {
    let sigma = cfg.sigma;
    if !(sigma > 0.0 && sigma <= 1.0 / 6.0) {
        return Err(Error::validation("KdV experiment needs σ ∈ (0, 1/6]"));
    }
    check_time(cfg.t, cfg.k, cfg.delta)?;
    if !cfg.base.is_real() {
        return Err(Error::validation("base state must be real"));
    }
    check_exponents(&cfg.m_values)?;
    let delta = cfg.delta.unwrap_or_else(|| (PI / (6.0 * cfg.t * cfg.k as f64)).sqrt());
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::validation("δ must be finite and non-negative"));
    }
    let model = FrequencyModel::Kdv;
    let base = &cfg.base;
    let build = |m: u32, n_m: i128| {
        let mf = m as f64;
        let pn = delta * (n_m as f64).powf(sigma);
        let shift = Complex64::new(0.0, delta * mf.sqrt());
        let mut p: BTreeMap<_, _> = base.modes.clone();
        p.insert(n_m, Complex64::new(pn, 0.0));
        p.insert(-n_m, Complex64::new(pn, 0.0));
        let mut q = base.modes.clone();
        q.insert(n_m, pn + shift);
        q.insert(-n_m, pn - shift);
        let diff = [(n_m, -shift), (-n_m, shift)].into_iter().collect();
        let delta_actions = [(n_m, -delta * delta * mf)].into_iter().collect();
        StatePair {
            p: BirkhoffState { modes: p, real: true },
            q: BirkhoffState { modes: q, real: true },
            diff,
            delta_actions,
        }
    };
    let threshold = delta / 2.0;
    let rows = run_rows(&cfg.m_values, base.max_mode(), cfg.t, -sigma, threshold, cfg.k, &model, build);
    Ok(ContinuityReport {
        experiment: "kdv".into(),
        sigma,
        t: cfg.t,
        k: cfg.k,
        delta,
        epsilon: None,
        norm_exponent: -sigma,
        threshold,
        model,
        base: base.clone(),
        onset: onset(&rows),
        rows,
        h0_defect: None,
    })
}

/// The two KdV2 constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kdv2Variant {
    /// `σ ≥ 1`: the `H₀` difference carried by mode `N` drives the phases.
    Hs,
    /// `1/2 ≤ σ < 1`: `H₀` is held fixed; the action difference at `n_m`
    /// drives the phases.
    LevelSet,
}

/// Parameters of the KdV2 experiments on `h^σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kdv2Experiment {
    pub variant: Kdv2Variant,
    pub sigma: f64,
    pub t: f64,
    pub k: u32,
    /// Overrides the default `δ` (`1/√(80Nπtk)` resp. `1/√(80ε²πtk)`).
    pub delta: Option<f64>,
    /// Base state `z°`.  `Hs`: supported below `N`; `LevelSet`: supported on
    /// `n ≤ N` with `z°_N ≠ 0`.
    pub base: BirkhoffState,
    /// The mode `N` modified by the construction.
    pub n: i128,
    pub m_values: Vec<u32>,
}

impl Kdv2Experiment {
    pub fn hs_default() -> Self {
        Kdv2Experiment {
            variant: Kdv2Variant::Hs,
            sigma: 1.0,
            t: 1.0,
            k: 1,
            delta: None,
            base: BirkhoffState::real_amplitudes(&[(1, 0.1)]).expect("valid base"),
            n: 2,
            m_values: (1..=60).collect(),
        }
    }

    pub fn level_set_default() -> Self {
        Kdv2Experiment {
            variant: Kdv2Variant::LevelSet,
            sigma: 0.5,
            t: 1.0,
            k: 40,
            delta: None,
            base: BirkhoffState::real_amplitudes(&[(1, 0.05), (2, 0.1)]).expect("valid base"),
            n: 2,
            m_values: (1..=125).collect(),
        }
    }
}

/// KdV2 non-uniform-continuity experiment with the pure frequency model
/// `(2nπ)⁵ + 40nπH₀ − 80n²π²I_n`.
pub fn kdv2_continuity_experiment(cfg: &Kdv2Experiment) -> Result<ContinuityReport> {
    check_time(cfg.t, cfg.k, cfg.delta)?;
    if !cfg.base.is_real() {
        return Err(Error::validation("base state must be real"));
    }
    if cfg.n < 1 {
        return Err(Error::validation("construction mode N must be positive"));
    }
    check_exponents(&cfg.m_values)?;
    let (t, k, sigma, big_n) = (cfg.t, cfg.k as f64, cfg.sigma, cfg.n);
    let nf = big_n as f64;
    let base = &cfg.base;
    let model = FrequencyModel::Kdv2;
    match cfg.variant {
        Kdv2Variant::Hs => {
            if !(sigma >= 1.0) {
                return Err(Error::validation("the H^s variant needs σ ≥ 1"));
            }
            if base.max_mode() >= big_n {
                return Err(Error::validation("base state must vanish for |n| ≥ N"));
            }
            let delta = cfg.delta.unwrap_or_else(|| 1.0 / (80.0 * nf * PI * t * k).sqrt());
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(Error::validation("δ must be finite and non-negative"));
            }
            let build = |m: u32, n_m: i128| {
                let (mf, nmf) = (m as f64, n_m as f64);
                let pn_big = delta * (mf / nmf).sqrt();
                let pm = Complex64::new(delta * nmf.powf(-sigma), 0.0);
                let mut p = base.modes.clone();
                let mut q = base.modes.clone();
                for sgn in [1, -1] {
                    p.insert(sgn * big_n, Complex64::new(pn_big, 0.0));
                    p.insert(sgn * n_m, pm);
                    q.insert(sgn * n_m, pm);
                }
                let diff = [(big_n, pn_big), (-big_n, pn_big)]
                    .into_iter()
                    .map(|(n, v)| (n, Complex64::new(v, 0.0)))
                    .chain(base.iter().map(|(n, _)| (n, Complex64::default())))
                    .chain([(n_m, Complex64::default()), (-n_m, Complex64::default())])
                    .collect();
                let delta_actions = [(big_n, delta * delta * mf / nmf)].into_iter().collect();
                StatePair {
                    p: BirkhoffState { modes: p, real: true },
                    q: BirkhoffState { modes: q, real: true },
                    diff,
                    delta_actions,
                }
            };
            let threshold = delta / 2.0;
            let rows = run_rows(&cfg.m_values, big_n, t, sigma, threshold, cfg.k, &model, build);
            Ok(ContinuityReport {
                experiment: "kdv2-hs".into(),
                sigma,
                t,
                k: cfg.k,
                delta,
                epsilon: None,
                norm_exponent: sigma,
                threshold,
                model,
                base: base.clone(),
                onset: onset(&rows),
                rows,
                h0_defect: None,
            })
        }
        Kdv2Variant::LevelSet => {
            if !(0.5..1.0).contains(&sigma) {
                return Err(Error::validation("the level-set variant needs 1/2 ≤ σ < 1"));
            }
            let zn = base.get(big_n);
            let eps = zn.norm();
            if eps == 0.0 || base.max_mode() != big_n {
                return Err(Error::validation("base state must have z°_N ≠ 0 and vanish beyond N"));
            }
            let delta = cfg.delta.unwrap_or_else(|| 1.0 / (80.0 * eps * eps * PI * t * k).sqrt());
            if !(delta >= 0.0 && delta < eps) {
                return Err(Error::validation(format!(
                    "level-set construction needs 0 ≤ δ < ε (δ = {delta}, ε = {eps}); increase k"
                )));
            }
            let radicands = |m: u32, n_m: i128| {
                let nmf = n_m as f64;
                let a = delta * delta / nf * nmf.powf(1.0 - 2.0 * sigma);
                let b = delta * delta / nf * m as f64 / nmf;
                (a, b)
            };
            if let Some(&m) = cfg.m_values.iter().find(|&&m| {
                let n_m = 1i128 << m;
                n_m > big_n && {
                    let (a, b) = radicands(m, n_m);
                    a + b >= 1.0
                }
            }) {
                return Err(Error::validation(format!("non-positive radicand at m = {m}")));
            }
            let build = |m: u32, n_m: i128| {
                let (mf, nmf) = (m as f64, n_m as f64);
                let (a, b) = radicands(m, n_m);
                let (ra, rab) = ((1.0 - a).sqrt(), (1.0 - a - b).sqrt());
                let p_big = zn * ra;
                let q_big = zn * rab;
                // ra − rab without cancellation
                let d_big = zn * (b / (ra + rab));
                let pm = delta * eps * nmf.powf(-sigma);
                let shift = Complex64::new(0.0, delta * eps * mf.sqrt() / nmf);
                let mut p = base.modes.clone();
                let mut q = base.modes.clone();
                p.insert(big_n, p_big);
                p.insert(-big_n, p_big.conj());
                q.insert(big_n, q_big);
                q.insert(-big_n, q_big.conj());
                p.insert(n_m, Complex64::new(pm, 0.0));
                p.insert(-n_m, Complex64::new(pm, 0.0));
                q.insert(n_m, pm + shift);
                q.insert(-n_m, pm - shift);
                let diff = base
                    .iter()
                    .map(|(n, _)| (n, Complex64::default()))
                    .chain([(big_n, d_big), (-big_n, d_big.conj()), (n_m, -shift), (-n_m, shift)])
                    .collect();
                let delta_actions = [
                    (big_n, eps * eps * b),
                    (n_m, -(delta * eps).powi(2) * mf / (nmf * nmf)),
                ]
                .into_iter()
                .collect();
                StatePair {
                    p: BirkhoffState { modes: p, real: true },
                    q: BirkhoffState { modes: q, real: true },
                    diff,
                    delta_actions,
                }
            };
            let threshold = delta * eps / 2.0;
            let rows = run_rows(&cfg.m_values, big_n, t, sigma, threshold, cfg.k, &model, build);
            let h0_base = base.h0();
            let h0_defect = cfg
                .m_values
                .iter()
                .filter(|&&m| (1i128 << m) > big_n)
                .map(|&m| {
                    let pair = build(m, 1i128 << m);
                    (pair.p.h0() - h0_base).abs().max((pair.q.h0() - h0_base).abs())
                })
                .fold(0.0, f64::max);
            Ok(ContinuityReport {
                experiment: "kdv2-level-set".into(),
                sigma,
                t,
                k: cfg.k,
                delta,
                epsilon: Some(eps),
                norm_exponent: sigma,
                threshold,
                model,
                base: base.clone(),
                onset: onset(&rows),
                rows,
                h0_defect: Some(h0_defect),
            })
        }
    }
}
