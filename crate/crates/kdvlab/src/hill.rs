//! Floquet discriminant and spectra of Hill's operator `L(q) = −∂²ₓ + q`.
//!
//! The fundamental solutions `y₁, y₂` of `−y″ + qy = λy` (with `y₁(0) = 1,
//! y₁′(0) = 0, y₂(0) = 0, y₂′(0) = 1`) are integrated over one period together
//! with their λ-derivatives, which solve `z″ = (q − λ)z − y` with zero data.
//! Then `Δ = y₁(1) + y₂′(1)` and `Δ˙ = ∂_λΔ = z₁(1) + z₂′(1)`.
//!
//! Near the periodic spectrum `Δ² − 4` is evaluated through the Wronskian
//! identity as `(y₁ − y₂′)² + 4y₁′y₂`, which avoids the cancellation in
//! `Δ² − 4` and resolves gaps down to ~1e-10.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{brent, chebyshev_grid};
use crate::ode::{integrate, integrate_fixed, OdeOptions};
use crate::potentials::{Potential, PotentialEvaluator};

/// Gaps shorter than this are reported as collapsed (`γ_n = 0`).
pub const COLLAPSE_THRESHOLD: f64 = 1e-9;

/// Default local ODE tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Discriminant data at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminantValue {
    pub delta: Complex64,
    pub delta_dot: Complex64,
    pub y2_at_1: Complex64,
    pub wronskian_residual: f64,
}

/// Monodromy data for real λ.
#[derive(Debug, Clone, Copy)]
pub struct Monodromy {
    pub y1: f64,
    pub y1p: f64,
    pub y2: f64,
    pub y2p: f64,
    /// `∂_λ y₁(1)` and `∂_λ y₂′(1)` (zero unless requested).
    pub z1: f64,
    pub z2p: f64,
}

impl Monodromy {
    /// `Δ(λ)`.
    pub fn delta(&self) -> f64 {
        self.y1 + self.y2p
    }

    /// `Δ˙(λ)` (requires the derivative system).
    pub fn delta_dot(&self) -> f64 {
        self.z1 + self.z2p
    }

    /// `Δ² − 4` in the cancellation-free form `(y₁ − y₂′)² + 4y₁′y₂`.
    pub fn delta_sq_minus_4(&self) -> f64 {
        let d = self.y1 - self.y2p;
        d * d + 4.0 * self.y1p * self.y2
    }
}

fn initial_step(lambda: f64) -> f64 {
    (0.5 / (1.0 + lambda.abs().sqrt())).min(0.05)
}

/// Integrates the fundamental system at real `λ` (optionally with the
/// λ-derivatives) with adaptive steps.
pub fn monodromy_real(
    ev: &PotentialEvaluator,
    lambda: f64,
    tol: f64,
    with_derivative: bool,
) -> Result<Monodromy> {
    monodromy_on_mesh(ev, lambda, tol, 0, with_derivative)
}

/// Number of equal steps giving fifth-order accuracy `≈ tol` at `λ`.
pub fn uniform_mesh_steps(lambda: f64, tol: f64) -> usize {
    let k = 1.0 + lambda.abs().sqrt();
    let hk = 0.5 * tol.powf(0.2);
    ((k / hk).ceil() as usize).max(64)
}

/// [`monodromy_real`] on `steps` equal steps (`steps = 0`: adaptive).
pub fn monodromy_on_mesh(
    ev: &PotentialEvaluator,
    lambda: f64,
    tol: f64,
    steps: usize,
    with_derivative: bool,
) -> Result<Monodromy> {
    let mut opts = OdeOptions::with_tol(tol);
    opts.h0 = initial_step(lambda);
    let wrap = |e: Error| Error::numerical(format!("{e} (λ = {lambda})"));
    if with_derivative {
        let rhs = |x: f64, y: &[f64; 8]| {
            let a = ev.eval(x) - lambda;
            [
                y[1],
                a * y[0],
                y[3],
                a * y[2],
                y[5],
                a * y[4] - y[0],
                y[7],
                a * y[6] - y[2],
            ]
        };
        let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let y = if steps == 0 {
            integrate(rhs, 0.0, 1.0, y0, opts).map_err(wrap)?.0
        } else {
            integrate_fixed(rhs, 0.0, 1.0, y0, steps).map_err(wrap)?
        };
        Ok(Monodromy { y1: y[0], y1p: y[1], y2: y[2], y2p: y[3], z1: y[4], z2p: y[7] })
    } else {
        let rhs = |x: f64, y: &[f64; 4]| {
            let a = ev.eval(x) - lambda;
            [y[1], a * y[0], y[3], a * y[2]]
        };
        let y0 = [1.0, 0.0, 0.0, 1.0];
        let y = if steps == 0 {
            integrate(rhs, 0.0, 1.0, y0, opts).map_err(wrap)?.0
        } else {
            integrate_fixed(rhs, 0.0, 1.0, y0, steps).map_err(wrap)?
        };
        Ok(Monodromy { y1: y[0], y1p: y[1], y2: y[2], y2p: y[3], z1: 0.0, z2p: 0.0 })
    }
}

/// Evaluates `Δ(λ)`, `Δ˙(λ)` and `y₂(1, λ)` for complex `λ`.
pub fn discriminant(q: &Potential, lambda: Complex64, tol: f64) -> Result<DiscriminantValue> {
    if !(tol > 0.0) {
        return Err(Error::validation("ODE tolerance must be positive"));
    }
    let ev = q.evaluator();
    if lambda.im == 0.0 {
        let m = monodromy_real(&ev, lambda.re, tol, true)?;
        let w = m.y1 * m.y2p - m.y1p * m.y2;
        return Ok(DiscriminantValue {
            delta: m.delta().into(),
            delta_dot: m.delta_dot().into(),
            y2_at_1: m.y2.into(),
            wronskian_residual: (w - 1.0).abs(),
        });
    }
    // Complex system: 8 complex unknowns packed as 16 reals (re, im).
    let rhs = |x: f64, y: &[f64; 16]| {
        let a = Complex64::new(ev.eval(x), 0.0) - lambda;
        let c = |i: usize| Complex64::new(y[2 * i], y[2 * i + 1]);
        let d = [
            c(1),
            a * c(0),
            c(3),
            a * c(2),
            c(5),
            a * c(4) - c(0),
            c(7),
            a * c(6) - c(2),
        ];
        let mut out = [0.0; 16];
        for (i, v) in d.iter().enumerate() {
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
        out
    };
    let mut y0 = [0.0; 16];
    y0[0] = 1.0;
    y0[6] = 1.0;
    let mut opts = OdeOptions::with_tol(tol);
    opts.h0 = initial_step(lambda.norm());
    let (y, _) = integrate(rhs, 0.0, 1.0, y0, opts)
        .map_err(|e| Error::numerical(format!("{e} (λ = {lambda})")))?;
    let c = |i: usize| Complex64::new(y[2 * i], y[2 * i + 1]);
    let w = c(0) * c(3) - c(1) * c(2);
    Ok(DiscriminantValue {
        delta: c(0) + c(3),
        delta_dot: c(4) + c(7),
        y2_at_1: c(2),
        wronskian_residual: (w - 1.0).norm(),
    })
}

/// Periodic, Dirichlet and critical spectra for indices `1..=N`.
///
/// Vectors are indexed by `n − 1`; use the accessor methods for 1-based
/// access. A collapsed gap has `γ_n = 0` and `λ_n^± = λ_n^• = τ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillSpectrum {
    #[serde(rename = "N")]
    pub n_max: usize,
    pub tol: f64,
    pub lambda0_plus: f64,
    pub lambda_minus: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda_dot: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
    /// Equal-step count used for the small gap `G_n` (0: adaptive steps).
    /// Every later evaluation inside that gap must use the same mesh.
    #[serde(default)]
    pub mesh_steps: Vec<usize>,
}

impl HillSpectrum {
    pub fn lambda_minus(&self, n: usize) -> f64 {
        self.lambda_minus[n - 1]
    }
    pub fn lambda_plus(&self, n: usize) -> f64 {
        self.lambda_plus[n - 1]
    }
    pub fn mu(&self, n: usize) -> f64 {
        self.mu[n - 1]
    }
    pub fn lambda_dot(&self, n: usize) -> f64 {
        self.lambda_dot[n - 1]
    }
    pub fn gamma(&self, n: usize) -> f64 {
        self.gamma[n - 1]
    }
    pub fn tau(&self, n: usize) -> f64 {
        self.tau[n - 1]
    }
    /// Mesh for evaluations inside `G_n` (see [`monodromy_on_mesh`]).
    pub fn mesh_steps(&self, n: usize) -> usize {
        self.mesh_steps.get(n - 1).copied().unwrap_or(0)
    }
    pub fn is_open(&self, n: usize) -> bool {
        self.gamma[n - 1] > 0.0
    }
    /// Indices `1..=N` of open gaps.
    pub fn open_gaps(&self) -> Vec<usize> {
        (1..=self.n_max).filter(|&n| self.is_open(n)).collect()
    }
    /// The spectrum of the same potential shifted by a constant.
    pub fn shifted(&self, c: f64) -> HillSpectrum {
        let sh = |v: &Vec<f64>| v.iter().map(|x| x + c).collect();
        HillSpectrum {
            n_max: self.n_max,
            tol: self.tol,
            lambda0_plus: self.lambda0_plus + c,
            lambda_minus: sh(&self.lambda_minus),
            lambda_plus: sh(&self.lambda_plus),
            mu: sh(&self.mu),
            lambda_dot: sh(&self.lambda_dot),
            gamma: self.gamma.clone(),
            tau: sh(&self.tau),
            mesh_steps: self.mesh_steps.clone(),
        }
    }
}

struct GapSolution {
    minus: f64,
    plus: f64,
    dot: f64,
    mu: f64,
    mesh: usize,
}

fn xtol_for(lambda: f64) -> f64 {
    4.0 * f64::EPSILON * lambda.abs().max(1.0)
}

/// Locates the critical point `λ_n^•` (root of `Δ˙`) in the search window.
fn find_critical(ev: &PotentialEvaluator, n: usize, center: f64, halfw: f64, tol: f64) -> Result<f64> {
    let dd = |x: f64| monodromy_real(ev, x, tol, true).map(|m| m.delta_dot());
    for widen in [1.0, 2.0] {
        let hw = halfw * widen;
        let grid = chebyshev_grid(center - hw, center + hw, 25);
        let vals: Vec<f64> = grid.iter().map(|&x| dd(x)).collect::<Result<_>>()?;
        let mut best: Option<(f64, usize)> = None;
        for i in 0..grid.len() - 1 {
            if vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum() {
                let mid = 0.5 * (grid[i] + grid[i + 1]);
                let dist = (mid - center).abs();
                if best.map_or(true, |(d, _)| dist < d) {
                    best = Some((dist, i));
                }
            }
        }
        if let Some((_, i)) = best {
            return brent(dd, grid[i], grid[i + 1], vals[i], vals[i + 1], xtol_for(center));
        }
    }
    Err(Error::numerical(format!(
        "no critical point of the discriminant isolated for n = {n} in [{:.6}, {:.6}]",
        center - 2.0 * halfw,
        center + 2.0 * halfw
    )))
}

/// Finds the gap edge on one side of `λ_n^•` where `Δ² − 4` changes sign.
fn find_edge<F>(f: F, n: usize, dot: f64, f_dot: f64, dir: f64, limit: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64> + Copy,
{
    let mut f = f;
    let h0 = 2.0 * n as f64 * PI * (f_dot / 4.0).sqrt();
    let mut h = (1.25 * h0).max(1e-12 * dot.abs().max(1.0));
    loop {
        let x = dot + dir * h;
        let fx = f(x)?;
        if fx <= 0.0 {
            let (a, b, fa, fb) = if dir < 0.0 { (x, dot, fx, f_dot) } else { (dot, x, f_dot, fx) };
            return brent(f, a, b, fa, fb, xtol_for(dot));
        }
        h *= 2.0;
        if h > limit {
            return Err(Error::numerical(format!(
                "gap edge of gap n = {n} not bracketed within {limit:.3} of λ• = {dot}"
            )));
        }
    }
}

/// Below this length a gap is re-solved on a frozen equal-step mesh, and
/// `λ_n^•` is re-derived from `Δ² − 4` inside the gap: adaptive step
/// selection makes the discretization error jump between nearby `λ`, and
/// the root of `Δ˙` carries an absolute error comparable to tiny gaps.
const SMALL_GAP: f64 = 1e-3;

/// `λ^•` of a small gap from `Δ² − 4 = (λ − λ⁻)(λ⁺ − λ)h(λ)`: with `h`
/// sampled at `τ ± γ/4`, the maximum sits at `τ + γ²h'/(8h) + O(γ³)`.
/// Returns `None` when the samples are not resolved (non-positive `h`).
fn refine_critical<F>(mut f: F, minus: f64, plus: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (tau, gamma) = (0.5 * (minus + plus), plus - minus);
    let w = 3.0 * gamma * gamma / 16.0;
    let ha = f(tau - 0.25 * gamma)? / w;
    let hb = f(tau + 0.25 * gamma)? / w;
    if !(ha > 0.0 && hb > 0.0) {
        return Ok(None);
    }
    let h = 0.5 * (ha + hb);
    let dh = (hb - ha) / (0.5 * gamma);
    Ok(Some((tau + gamma * gamma * dh / (8.0 * h)).clamp(minus, plus)))
}

/// Edges and `μ_n` around a known critical point on a given mesh.
fn gap_from_critical(
    ev: &PotentialEvaluator,
    n: usize,
    dot: f64,
    limit: f64,
    tol: f64,
    mesh: usize,
) -> Result<GapSolution> {
    let f = |x: f64| monodromy_on_mesh(ev, x, tol, mesh, false).map(|m| m.delta_sq_minus_4());
    let collapsed = GapSolution { minus: dot, plus: dot, dot, mu: dot, mesh };
    let f_dot = f(dot)?;
    if f_dot <= 0.0 {
        return Ok(collapsed);
    }
    let minus = find_edge(f, n, dot, f_dot, -1.0, limit)?;
    let plus = find_edge(f, n, dot, f_dot, 1.0, limit)?;
    if plus - minus < COLLAPSE_THRESHOLD {
        return Ok(collapsed);
    }
    let dot = if plus - minus < SMALL_GAP { refine_critical(f, minus, plus)?.unwrap_or(dot) } else { dot };
    let y2 = |x: f64| monodromy_on_mesh(ev, x, tol, mesh, false).map(|m| m.y2);
    let (ym, yp) = (y2(minus)?, y2(plus)?);
    let mu = if ym.signum() != yp.signum() {
        brent(y2, minus, plus, ym, yp, xtol_for(dot))?
    } else if ym.abs() <= yp.abs() {
        minus
    } else {
        plus
    };
    Ok(GapSolution { minus, plus, dot, mu, mesh })
}

fn solve_gap(ev: &PotentialEvaluator, n: usize, mean: f64, w: f64, tol: f64) -> Result<GapSolution> {
    let center = (n * n) as f64 * PI * PI + mean;
    let halfw = 3.0 * n as f64 + w;
    let dot = find_critical(ev, n, center, halfw, tol)?;
    let limit = 4.0 * halfw;
    let adaptive = gap_from_critical(ev, n, dot, limit, tol, 0)?;
    let gamma = adaptive.plus - adaptive.minus;
    if gamma == 0.0 || gamma >= SMALL_GAP {
        return Ok(adaptive);
    }
    // Re-solve on a frozen mesh; the critical point of the discrete
    // discriminant lies within a few gap lengths of the adaptive one.
    let mesh = uniform_mesh_steps(dot, tol);
    let dd = |x: f64| monodromy_on_mesh(ev, x, tol, mesh, true).map(|m| m.delta_dot());
    let mut hw = (2.0 * gamma).max(1e-7);
    for _ in 0..4 {
        let (a, b) = (adaptive.dot - hw, adaptive.dot + hw);
        let (fa, fb) = (dd(a)?, dd(b)?);
        if fa.signum() != fb.signum() {
            let dot = brent(dd, a, b, fa, fb, xtol_for(dot))?;
            return gap_from_critical(ev, n, dot, limit, tol, mesh);
        }
        hw *= 10.0;
    }
    Err(Error::numerical(format!("critical point of small gap n = {n} lost on the fixed mesh")))
}

fn find_ground_state(ev: &PotentialEvaluator, q: &Potential, tol: f64) -> Result<f64> {
    let f = |x: f64| monodromy_real(ev, x, tol, false).map(|m| m.delta_sq_minus_4());
    let c = q.mean();
    let mut lo = q.grid_min(256) - q.l1_oscillation() * 0.01 - 1.0;
    let mut flo = f(lo)?;
    let mut tries = 0;
    while flo <= 0.0 {
        lo -= 2f64.powi(tries) ;
        flo = f(lo)?;
        tries += 1;
        if tries > 40 {
            return Err(Error::numerical("ground state λ₀⁺ not bracketed from below"));
        }
    }
    for hi in [c + 0.5, c, c + 1.0, c + 2.0, c + 0.25 * PI * PI] {
        let fhi = f(hi)?;
        if fhi < 0.0 {
            return brent(f, lo, hi, flo, fhi, xtol_for(hi));
        }
    }
    Err(Error::numerical("ground state λ₀⁺ not bracketed from above"))
}

/// Computes `λ₀⁺` and, for `1 ≤ n ≤ N`, `λ_n^±`, `μ_n`, `λ_n^•`, `γ_n`, `τ_n`.
pub fn periodic_spectrum(q: &Potential, n_max: usize, tol: f64) -> Result<HillSpectrum> {
    if n_max < 1 {
        return Err(Error::validation("spectrum truncation N must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::validation("ODE tolerance must be positive"));
    }
    let ev = q.evaluator();
    let w = 2.0 * q.l1_oscillation();
    let lambda0 = find_ground_state(&ev, q, tol)?;
    let gaps: Vec<GapSolution> = (1..=n_max)
        .into_par_iter()
        .map(|n| solve_gap(&ev, n, q.mean(), w, tol))
        .collect::<Result<_>>()?;
    let mut spec = HillSpectrum {
        n_max,
        tol,
        lambda0_plus: lambda0,
        lambda_minus: Vec::with_capacity(n_max),
        lambda_plus: Vec::with_capacity(n_max),
        mu: Vec::with_capacity(n_max),
        lambda_dot: Vec::with_capacity(n_max),
        gamma: Vec::with_capacity(n_max),
        tau: Vec::with_capacity(n_max),
        mesh_steps: Vec::with_capacity(n_max),
    };
    for g in gaps {
        spec.lambda_minus.push(g.minus);
        spec.lambda_plus.push(g.plus);
        spec.mu.push(g.mu);
        spec.lambda_dot.push(g.dot);
        spec.gamma.push(g.plus - g.minus);
        spec.tau.push(0.5 * (g.plus + g.minus));
        spec.mesh_steps.push(g.mesh);
    }
    let mut prev = spec.lambda0_plus;
    for n in 1..=n_max {
        if !(spec.lambda_minus(n) > prev) {
            return Err(Error::numerical(format!(
                "spectral ordering violated at n = {n}: λ_n^- = {} ≤ {prev}",
                spec.lambda_minus(n)
            )));
        }
        prev = spec.lambda_plus(n);
    }
    Ok(spec)
}
