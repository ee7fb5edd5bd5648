//! Pseudo-spectral integrator for the Airy, KdV and KdV2 equations on the
//! unit circle, used as an independent oracle for frequencies,
//! isospectrality and the smoothing of the nonlinear part.
//!
//! `u(x) = Σ û_n e^{i2nπx}`, `k = 2nπ`:
//!
//! * Airy: `u_t = −u_xxx`, symbol `ik³`;
//! * KdV: `u_t = −u_xxx + 6uu_x = −u_xxx + ∂_x(3u²)`;
//! * KdV2: `u_t = u_xxxxx + ∂_x(10u³ − 5u_x² − 10uu_xx)`, symbol `ik⁵`.
//!
//! Time stepping is exponential fourth-order Runge–Kutta (ETDRK4): the
//! linear part is advanced by its exact phase, the coefficient functions are
//! evaluated by contour averaging.  Products are formed on a zero-padded
//! grid of `2M` points and the state is kept inside the 2/3-rule band
//! `|n| ≤ M/3`, which makes quadratic and cubic terms alias-free.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::periodic_spectrum;
use crate::invariants::{analyze, AnalysisConfig};
use crate::numerics::{linear_fit, unwrap_phases};
use crate::potentials::Potential;

/// Evolution equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeEquation {
    Airy,
    Kdv,
    Kdv2,
}

impl PdeEquation {
    /// Linear symbol `L(k)`: `ik³` (Airy, KdV) or `ik⁵` (KdV2).
    pub fn symbol(self, k: f64) -> Complex64 {
        match self {
            PdeEquation::Airy | PdeEquation::Kdv => Complex64::new(0.0, k.powi(3)),
            PdeEquation::Kdv2 => Complex64::new(0.0, k.powi(5)),
        }
    }

    /// Default `(dt, M)` pair.
    pub fn defaults(self) -> (f64, usize) {
        match self {
            PdeEquation::Airy | PdeEquation::Kdv => (1e-5, 256),
            PdeEquation::Kdv2 => (5e-8, 64),
        }
    }
}

/// Step size, grid size and sampling stride.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub dt: f64,
    /// Number of Fourier modes (power of two).
    #[serde(rename = "M")]
    pub m: usize,
    /// Steps between stored samples.
    pub stride: usize,
}

impl PdeConfig {
    pub fn for_equation(eq: PdeEquation) -> Self {
        let (dt, m) = eq.defaults();
        PdeConfig { dt, m, stride: 10 }
    }

    /// Parses `key = value` lines (`dt`, `M`, `stride`; `#` comments).
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: PdeConfig =
            toml::from_str(text).map_err(|e| Error::validation(format!("config file: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("dt must be positive and finite"));
        }
        if self.m < 8 || !self.m.is_power_of_two() {
            return Err(Error::validation("M must be a power of two ≥ 8"));
        }
        if self.stride == 0 {
            return Err(Error::validation("stride must be ≥ 1"));
        }
        Ok(())
    }
}

/// Modes `û_n`, `|n| < M/2`, at time `t` (FFT ordering).
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub u_hat: Vec<Complex64>,
}

#[derive(Serialize)]
struct SampleLine {
    t: f64,
    #[serde(rename = "M")]
    m: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl GridState {
    /// Band-limited state of `q` on `M` modes; modes beyond `M/3` are
    /// rejected.
    pub fn from_potential(q: &Potential, m: usize) -> Result<Self> {
        if q.max_mode() as usize > m / 3 {
            return Err(Error::validation(format!(
                "potential has mode {} beyond the resolved band M/3 = {}",
                q.max_mode(),
                m / 3
            )));
        }
        let mut u_hat = vec![Complex64::default(); m];
        u_hat[0] = Complex64::new(q.mean(), 0.0);
        for (n, u) in q.modes() {
            u_hat[n as usize] = u;
            u_hat[m - n as usize] = u.conj();
        }
        Ok(GridState { t: 0.0, u_hat })
    }

    pub fn m(&self) -> usize {
        self.u_hat.len()
    }

    /// `û_n` for `|n| < M/2`.
    pub fn mode(&self, n: i64) -> Complex64 {
        let m = self.m() as i64;
        if n.abs() >= m / 2 {
            return Complex64::default();
        }
        self.u_hat[n.rem_euclid(m) as usize]
    }

    /// Truncated potential (modes with `|û_n| ≤ threshold` dropped).
    pub fn to_potential(&self, threshold: f64) -> Result<Potential> {
        let pos: Vec<Complex64> = (1..self.m() as i64 / 2).map(|n| self.mode(n)).collect();
        Potential::from_positive_modes(self.u_hat[0].re, &pos, threshold)
    }

    /// `max_n |û_{−n} − conj(û_n)|`.
    pub fn reality_defect(&self) -> f64 {
        (1..self.m() as i64 / 2).map(|n| (self.mode(-n) - self.mode(n).conj()).norm()).fold(0.0, f64::max)
    }

    /// `(Σ_n ⟨n⟩^{2s}|û_n|²)^{1/2}`, `⟨n⟩ = 1 + |n|`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let m = self.m() as i64;
        (-(m / 2) + 1..m / 2)
            .map(|n| (1.0 + n.abs() as f64).powf(2.0 * s) * self.mode(n).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(H₀, H₁, H₂)` by exact quadrature on a `2M` grid:
    /// `½∫u²`, `½∫(u_x² + 2u³)`, `½∫(u_xx² + 10uu_x² + 5u⁴)`.
    pub fn hamiltonians(&self) -> (f64, f64, f64) {
        let mut ws = Workspace::new(self.m());
        let [u, ux, uxx] = ws.physical(&self.u_hat);
        let p = u.len() as f64;
        let (mut h0, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for j in 0..u.len() {
            h0 += u[j] * u[j];
            h1 += ux[j] * ux[j] + 2.0 * u[j].powi(3);
            h2 += uxx[j] * uxx[j] + 10.0 * u[j] * ux[j] * ux[j] + 5.0 * u[j].powi(4);
        }
        (0.5 * h0 / p, 0.5 * h1 / p, 0.5 * h2 / p)
    }

    /// One JSON line `{"t":…, "M":…, "re":[…], "im":[…]}` with modes
    /// `0 ≤ n < M/2`.
    pub fn write_json_line<W: Write>(&self, w: &mut W) -> Result<()> {
        let half = self.m() / 2;
        let line = SampleLine {
            t: self.t,
            m: self.m(),
            re: self.u_hat[..half].iter().map(|c| c.re).collect(),
            im: self.u_hat[..half].iter().map(|c| c.im).collect(),
        };
        crate::io::write_json(&mut *w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::validation(format!("write failed: {e}")))
    }
}

/// Padded-grid transforms shared by the nonlinear terms.
struct Workspace {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let p = 2 * m;
        Workspace { m, fwd: planner.plan_fft_forward(p), inv: planner.plan_fft_inverse(p), buf: vec![Complex64::default(); p] }
    }

    fn wavenumber(&self, j: usize) -> f64 {
        let n = if j < self.m / 2 { j as f64 } else { j as f64 - self.m as f64 };
        2.0 * PI * n
    }

    /// Physical values of `∂^d u` on the padded grid.
    fn to_grid(&mut self, u_hat: &[Complex64], d: u32) -> Vec<f64> {
        let (m, p) = (self.m, 2 * self.m);
        self.buf.iter_mut().for_each(|v| *v = Complex64::default());
        for (j, &v) in u_hat.iter().enumerate() {
            if j == m / 2 {
                continue;
            }
            let target = if j < m / 2 { j } else { j + m };
            let ik = Complex64::new(0.0, self.wavenumber(j));
            self.buf[target] = v * ik.powu(d);
        }
        debug_assert_eq!(self.buf.len(), p);
        self.inv.process(&mut self.buf);
        self.buf.iter().map(|c| c.re).collect()
    }

    fn physical(&mut self, u_hat: &[Complex64]) -> [Vec<f64>; 3] {
        [self.to_grid(u_hat, 0), self.to_grid(u_hat, 1), self.to_grid(u_hat, 2)]
    }

    /// `ik·FFT(f)` truncated to the 2/3 band of the `M`-mode state.
    fn derivative_of(&mut self, f: &[f64]) -> Vec<Complex64> {
        let (m, p) = (self.m, 2 * self.m);
        for (b, &v) in self.buf.iter_mut().zip(f) {
            *b = Complex64::new(v, 0.0);
        }
        self.fwd.process(&mut self.buf);
        let band = (m / 3) as i64;
        let scale = 1.0 / p as f64;
        let mut out = vec![Complex64::default(); m];
        for n in -band..=band {
            let src = n.rem_euclid(p as i64) as usize;
            let dst = n.rem_euclid(m as i64) as usize;
            let k = 2.0 * PI * n as f64;
            out[dst] = Complex64::new(0.0, k) * self.buf[src] * scale;
        }
        out
    }

    fn nonlinear(&mut self, eq: PdeEquation, u_hat: &[Complex64]) -> Vec<Complex64> {
        match eq {
            PdeEquation::Airy => vec![Complex64::default(); self.m],
            PdeEquation::Kdv => {
                let u = self.to_grid(u_hat, 0);
                let f: Vec<f64> = u.iter().map(|v| 3.0 * v * v).collect();
                self.derivative_of(&f)
            }
            PdeEquation::Kdv2 => {
                let [u, ux, uxx] = self.physical(u_hat);
                let f: Vec<f64> = (0..u.len())
                    .map(|j| 10.0 * u[j].powi(3) - 5.0 * ux[j] * ux[j] - 10.0 * u[j] * uxx[j])
                    .collect();
                self.derivative_of(&f)
            }
        }
    }
}

/// ETDRK4 coefficient arrays for one step size.
struct EtdCoefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl EtdCoefficients {
    fn new(eq: PdeEquation, m: usize, h: f64) -> Self {
        const CONTOUR: usize = 32;
        let roots: Vec<Complex64> = (1..=CONTOUR)
            .map(|j| Complex64::from_polar(1.0, PI * (j as f64 - 0.5) / CONTOUR as f64))
            .collect();
        let mut c = EtdCoefficients {
            e: Vec::with_capacity(m),
            e2: Vec::with_capacity(m),
            q: Vec::with_capacity(m),
            f1: Vec::with_capacity(m),
            f2: Vec::with_capacity(m),
            f3: Vec::with_capacity(m),
        };
        for j in 0..m {
            let n = if j < m / 2 { j as f64 } else { j as f64 - m as f64 };
            let l = eq.symbol(2.0 * PI * n) * h;
            c.e.push(l.exp());
            c.e2.push((l / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            // conjugate pairs on the full circle give real-symmetric means;
            // use both halves so that purely imaginary symbols stay exact
            for r in roots.iter().flat_map(|r| [*r, r.conj()]) {
                let z = l + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z / 2.0).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let w = h / (2 * CONTOUR) as f64;
            c.q.push(q * w);
            c.f1.push(f1 * w);
            c.f2.push(f2 * w);
            c.f3.push(f3 * w);
        }
        c
    }
}

/// Stateful integrator for one equation and grid size.
pub struct Integrator {
    eq: PdeEquation,
    m: usize,
    ws: Workspace,
    cache: HashMap<u64, EtdCoefficients>,
}

impl Integrator {
    pub fn new(eq: PdeEquation, m: usize) -> Self {
        Integrator { eq, m, ws: Workspace::new(m), cache: HashMap::new() }
    }

    /// One ETDRK4 step of size `h`.
    pub fn step(&mut self, state: &mut GridState, h: f64) -> Result<()> {
        if state.m() != self.m {
            return Err(Error::validation("state size does not match the integrator"));
        }
        let (eq, m) = (self.eq, self.m);
        let coef = self.cache.entry(h.to_bits()).or_insert_with(|| EtdCoefficients::new(eq, m, h));
        let v = &state.u_hat;
        if eq == PdeEquation::Airy {
            state.u_hat = v.iter().zip(&coef.e).map(|(a, b)| a * b).collect();
            state.t += h;
            return Ok(());
        }
        let nv = self.ws.nonlinear(eq, v);
        let a: Vec<Complex64> = (0..m).map(|j| coef.e2[j] * v[j] + coef.q[j] * nv[j]).collect();
        let na = self.ws.nonlinear(eq, &a);
        let b: Vec<Complex64> = (0..m).map(|j| coef.e2[j] * v[j] + coef.q[j] * na[j]).collect();
        let nb = self.ws.nonlinear(eq, &b);
        let c: Vec<Complex64> =
            (0..m).map(|j| coef.e2[j] * a[j] + coef.q[j] * (2.0 * nb[j] - nv[j])).collect();
        let nc = self.ws.nonlinear(eq, &c);
        let next: Vec<Complex64> = (0..m)
            .map(|j| {
                coef.e[j] * v[j] + nv[j] * coef.f1[j] + 2.0 * (na[j] + nb[j]) * coef.f2[j] + nc[j] * coef.f3[j]
            })
            .collect();
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::numerical(format!("non-finite state at t = {}", state.t + h)));
        }
        state.u_hat = next;
        state.t += h;
        Ok(())
    }

    /// Advances by exactly `span` using equal steps no larger than `dt`.
    pub fn advance(&mut self, state: &mut GridState, span: f64, dt: f64) -> Result<()> {
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let t_end = state.t + span;
        for _ in 0..steps {
            self.step(state, h)?;
        }
        state.t = t_end;
        Ok(())
    }
}

/// Sampled trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub equation: PdeEquation,
    pub config: PdeConfig,
    pub samples: Vec<GridState>,
    /// Set when the run aborted; `samples` then ends at the last valid state.
    pub error: Option<String>,
}

impl Trajectory {
    /// Writes all samples as JSON lines.
    pub fn write_json_lines<W: Write>(&self, w: &mut W) -> Result<()> {
        for s in &self.samples {
            s.write_json_line(w)?;
        }
        Ok(())
    }

    /// Relative drift `max_t |H_j(t) − H_j(0)| / max(|H_j(0)|, 1e-300)`.
    pub fn hamiltonian_drift(&self) -> [f64; 3] {
        let h = |s: &GridState| {
            let (a, b, c) = s.hamiltonians();
            [a, b, c]
        };
        let h_init = h(&self.samples[0]);
        let mut out = [0.0; 3];
        for s in &self.samples[1..] {
            let hv = h(s);
            for j in 0..3 {
                out[j] = f64::max(out[j], (hv[j] - h_init[j]).abs() / h_init[j].abs().max(1e-300));
            }
        }
        out
    }
}

/// Integrates `q` up to time `t_final`, sampling every `stride` steps and at
/// the final time.
pub fn evolve(q: &Potential, t_final: f64, eq: PdeEquation, cfg: &PdeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::validation("final time must be finite and non-negative"));
    }
    let mut state = GridState::from_potential(q, cfg.m)?;
    let mut integ = Integrator::new(eq, cfg.m);
    let steps = (t_final / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let mut samples = vec![state.clone()];
    let mut error = None;
    for s in 1..=steps {
        if let Err(e) = integ.step(&mut state, h) {
            error = Some(e.to_string());
            break;
        }
        if s == steps {
            state.t = t_final;
        }
        if s % cfg.stride == 0 || s == steps {
            samples.push(state.clone());
        }
    }
    Ok(Trajectory { equation: eq, config: *cfg, samples, error })
}

/// Least-squares phase velocity of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFit {
    pub n: usize,
    pub omega: f64,
    /// RMS phase residual of the linear fit.
    pub residual: f64,
    pub samples: usize,
}

/// Slope of the unwrapped `arg û_n(t)` over samples with `t ∈ [t0, t1]`.
pub fn measure_mode_frequency(traj: &Trajectory, n: usize, window: (f64, f64)) -> Result<FrequencyFit> {
    let pts: Vec<&GridState> =
        traj.samples.iter().filter(|s| s.t >= window.0 - 1e-15 && s.t <= window.1 + 1e-15).collect();
    if pts.len() < 3 {
        return Err(Error::validation("fit window holds fewer than three samples"));
    }
    let max_dt = pts.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    let w_lin = traj.equation.symbol(2.0 * PI * n as f64).im.abs();
    if w_lin * max_dt > PI {
        return Err(Error::validation(format!(
            "sampling interval {max_dt:e} aliases mode {n} (|ω|·Δt > π); lower the stride"
        )));
    }
    let scale = pts.iter().map(|s| s.mode(n as i64).norm()).fold(0.0, f64::max);
    if pts.iter().any(|s| s.mode(n as i64).norm() <= 1e-8 * scale.max(1e-300)) || scale == 0.0 {
        return Err(Error::numerical(format!("mode {n} amplitude vanishes within the window")));
    }
    let t: Vec<f64> = pts.iter().map(|s| s.t).collect();
    let raw: Vec<f64> = pts.iter().map(|s| s.mode(n as i64).arg()).collect();
    let phase = unwrap_phases(&raw);
    let (slope, _, rms) = linear_fit(&t, &phase);
    Ok(FrequencyFit { n, omega: slope, residual: rms, samples: pts.len() })
}

/// Gap-length drift along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub n: Vec<usize>,
    pub gamma_initial: Vec<f64>,
    /// `max_t |γ_n(t) − γ_n(0)|` per index.
    pub drift: Vec<f64>,
    pub max_drift: f64,
    pub samples_used: usize,
    /// Set when some sample failed to produce a spectrum.
    pub partial: bool,
}

/// Recomputes the periodic spectrum at every `every`-th sample.
pub fn isospectral_drift(traj: &Trajectory, ns: &[usize], every: usize, tol: f64) -> Result<DriftReport> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::validation("gap indices must be positive"));
    }
    let n_max = *ns.iter().max().unwrap();
    let gammas = |s: &GridState| -> Result<Vec<f64>> {
        let q = s.to_potential(1e-15)?;
        let spec = periodic_spectrum(&q, n_max, tol)?;
        Ok(ns.iter().map(|&n| spec.gamma(n)).collect())
    };
    let g0 = gammas(&traj.samples[0])?;
    let mut drift = vec![0.0; ns.len()];
    let mut partial = false;
    let mut used = 1;
    for s in traj.samples.iter().skip(1).step_by(every.max(1)).chain(traj.samples.last()) {
        match gammas(s) {
            Ok(g) => {
                used += 1;
                for j in 0..ns.len() {
                    drift[j] = f64::max(drift[j], (g[j] - g0[j]).abs());
                }
            }
            Err(_) => partial = true,
        }
    }
    let max_drift = drift.iter().copied().fold(0.0, f64::max);
    Ok(DriftReport { n: ns.to_vec(), gamma_initial: g0, drift, max_drift, samples_used: used, partial })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub t: f64,
    /// `‖u(t) − e^{tL}q‖_{H¹}`.
    pub gap: f64,
    /// `gap/(1 + |t|)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub rows: Vec<SmoothingRow>,
    pub sup_ratio: f64,
}

/// `‖u(t) − e^{tL}q‖_{H¹}` on an increasing time grid, `L` the linear part
/// of `eq` (KdV or KdV2).
pub fn one_smoothing_gap(q: &Potential, times: &[f64], eq: PdeEquation, cfg: &PdeConfig) -> Result<SmoothingReport> {
    cfg.validate()?;
    if eq == PdeEquation::Airy {
        return Err(Error::validation("the smoothing gap compares a nonlinear flow with its linear part"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::validation("time grid must be non-negative and increasing"));
    }
    let init = GridState::from_potential(q, cfg.m)?;
    let mut state = init.clone();
    let mut integ = Integrator::new(eq, cfg.m);
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - state.t;
        integ.advance(&mut state, span, cfg.dt)?;
        let m = cfg.m as i64;
        let mut s = 0.0;
        for n in -(m / 2) + 1..m / 2 {
            let lin = init.mode(n) * (eq.symbol(2.0 * PI * n as f64) * t).exp();
            s += (1.0 + n.abs() as f64).powi(2) * (state.mode(n) - lin).norm_sqr();
        }
        let gap = s.sqrt();
        rows.push(SmoothingRow { t, gap, ratio: gap / (1.0 + t.abs()) });
    }
    let sup_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SmoothingReport { rows, sup_ratio })
}

/// Moment-route versus PDE-route frequency of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub equation: PdeEquation,
    pub n: usize,
    pub moment_omega: f64,
    pub pde_omega: f64,
    pub relative_difference: f64,
    pub fit_residual: f64,
    pub t_final: f64,
    pub pde: PdeConfig,
}

/// Runs both frequency routes for mode `n` of `q` (KdV or KdV2).
pub fn crosscheck(
    q: &Potential,
    eq: PdeEquation,
    n: usize,
    t_final: f64,
    pde: &PdeConfig,
    analysis: &AnalysisConfig,
) -> Result<CrosscheckReport> {
    if eq == PdeEquation::Airy {
        return Err(Error::validation("crosscheck compares KdV or KdV2 frequencies"));
    }
    if n == 0 || n > analysis.n_max {
        return Err(Error::validation(format!("mode {n} outside 1..={}", analysis.n_max)));
    }
    let rep = analyze(q, analysis)?.frequencies();
    let moment_omega = match eq {
        PdeEquation::Kdv2 => rep.omega2[n - 1],
        _ => rep.omega1[n - 1],
    };
    let traj = evolve(q, t_final, eq, pde)?;
    if let Some(e) = &traj.error {
        return Err(Error::numerical(format!("PDE run aborted: {e}")));
    }
    let fit = measure_mode_frequency(&traj, n, (0.0, t_final))?;
    Ok(CrosscheckReport {
        equation: eq,
        n,
        moment_omega,
        pde_omega: fit.omega,
        relative_difference: (fit.omega - moment_omega).abs() / moment_omega.abs(),
        fit_residual: fit.residual,
        t_final,
        pde: *pde,
    })
}
