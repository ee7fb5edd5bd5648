//! Standard roots `ς_n`, the canonical root `√ᶜ(Δ² − 4)`, the gap-normalized
//! Floquet exponent `F_n` and the ψ-functions.
//!
//! Gap `G_n = [λ_n^−, λ_n^+]` is parametrized by `λ_t = τ_n + tγ_n/2`,
//! `t ∈ [−1, 1]`; the two sides `G_n^±` are the limits from the upper/lower
//! half plane. On `G_n^−` the standard root equals `+i(γ_n/2)√(1−t²)` and on
//! `G_n^+` it equals `−i(γ_n/2)√(1−t²)`.
//!
//! Contour integrals around a gap (counterclockwise) of functions that change
//! sign across the gap reduce to twice the integral along `G_n^−`; with the
//! `1/√(1−t²)` endpoint behaviour made explicit they are evaluated by
//! Gauss–Chebyshev quadrature. All such reductions below are written in terms
//! of real "reduced integrands" so that no complex arithmetic is needed on the
//! real axis.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{monodromy_on_mesh, HillSpectrum};
use crate::numerics::{chebyshev_node_weights, chebyshev_nodes};
use crate::potentials::Potential;

/// Default number of Gauss–Chebyshev nodes for gap integrals.
pub const DEFAULT_NODES: usize = 96;

/// Side of a gap: limit from the upper (`Plus`) or lower (`Minus`) half plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// `+1` for `Plus`, `−1` for `Minus`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// One side of the n-th gap, parametrized by `t ∈ [−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapContour {
    pub n: usize,
    pub side: Side,
}

impl GapContour {
    /// `λ_t = τ_n + tγ_n/2` (real part; the side is a limit direction). The
    /// endpoints return the stored eigenvalues exactly.
    pub fn lambda(&self, spec: &HillSpectrum, t: f64) -> f64 {
        if t == -1.0 {
            spec.lambda_minus(self.n)
        } else if t == 1.0 {
            spec.lambda_plus(self.n)
        } else {
            spec.tau(self.n) + 0.5 * t * spec.gamma(self.n)
        }
    }
}

/// Principal square root with non-negative real part.
pub fn sqrt_plus(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// `sin√λ/√λ` (entire in λ).
pub fn sinc_sqrt(lambda: Complex64) -> Complex64 {
    if lambda.norm() < 1e-3 {
        // 1 − λ/6 + λ²/120 − λ³/5040
        let l = lambda;
        return Complex64::new(1.0, 0.0) - l / 6.0 + l * l / 120.0 - l * l * l / 5040.0;
    }
    let s = lambda.sqrt();
    s.sin() / s
}

/// Standard root for real `λ` outside the open gap (`|τ − λ| ≥ γ/2`).
#[inline]
fn std_root_real(tau: f64, gamma: f64, lambda: f64) -> f64 {
    let w = tau - lambda;
    if gamma == 0.0 {
        return w;
    }
    let r = 1.0 - gamma * gamma / (4.0 * w * w);
    w * r.max(0.0).sqrt()
}

/// The standard root `ς_n(λ)`.
///
/// Off the gap this is `(τ_n − λ)√⁺(1 − γ_n²/(4(τ_n − λ)²))`; for real `λ` in
/// the open gap a side must be given and `∓i(γ_n/2)√(1−t²)` is returned for
/// side `±`.
pub fn standard_root(
    spec: &HillSpectrum,
    n: usize,
    lambda: Complex64,
    side: Option<Side>,
) -> Result<Complex64> {
    check_index(spec, n)?;
    let (tau, gamma) = (spec.tau(n), spec.gamma(n));
    let w = Complex64::new(tau, 0.0) - lambda;
    if gamma == 0.0 {
        return Ok(w);
    }
    let inside = lambda.im == 0.0 && (lambda.re - tau).abs() < 0.5 * gamma;
    if inside {
        let side = side.ok_or_else(|| {
            Error::validation(format!(
                "λ = {} lies inside the open gap G_{n}; a side is required",
                lambda.re
            ))
        })?;
        let t = 2.0 * (lambda.re - tau) / gamma;
        let mag = 0.5 * gamma * (1.0 - t * t).max(0.0).sqrt();
        return Ok(Complex64::new(0.0, -side.sign() * mag));
    }
    let r = Complex64::new(1.0, 0.0) - gamma * gamma / (4.0 * w * w);
    Ok(w * sqrt_plus(r))
}

fn check_index(spec: &HillSpectrum, n: usize) -> Result<()> {
    if n == 0 || n > spec.n_max {
        return Err(Error::validation(format!(
            "gap index {n} outside the computed spectrum 1..={}",
            spec.n_max
        )));
    }
    Ok(())
}

fn check_truncation(spec: &HillSpectrum, m: usize) -> Result<()> {
    if m == 0 || m > spec.n_max {
        return Err(Error::validation(format!(
            "truncation M = {m} exceeds the computed spectrum N = {}",
            spec.n_max
        )));
    }
    Ok(())
}

fn check_off_gaps(spec: &HillSpectrum, lambda: Complex64, m: usize) -> Result<()> {
    if lambda.im != 0.0 {
        return Ok(());
    }
    for k in 1..=m {
        if spec.is_open(k) && lambda.re > spec.lambda_minus(k) && lambda.re < spec.lambda_plus(k) {
            return Err(Error::validation(format!(
                "λ = {} lies inside the open gap G_{k}; use the gap-side forms",
                lambda.re
            )));
        }
    }
    Ok(())
}

/// The canonical root `√ᶜ(Δ² − 4)` from the standard-root product with
/// collapsed-gap tail for `m > M`.
pub fn canonical_root(spec: &HillSpectrum, lambda: Complex64, m_trunc: usize) -> Result<Complex64> {
    check_truncation(spec, m_trunc)?;
    check_off_gaps(spec, lambda, m_trunc)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for m in 1..=m_trunc {
        let m2 = (m * m) as f64 * PI * PI;
        let s = standard_root(spec, m, lambda, None)?;
        prod *= s / (Complex64::new(m2, 0.0) - lambda);
    }
    let l0 = Complex64::new(spec.lambda0_plus, 0.0);
    Ok(Complex64::new(0.0, -2.0) * sqrt_plus(lambda - l0) * prod * sinc_sqrt(lambda))
}

/// `Δ(λ)² − 4` from the product representation with collapsed-gap tail.
pub fn product_delta_sq_minus_4(spec: &HillSpectrum, lambda: Complex64, m_trunc: usize) -> Result<Complex64> {
    check_truncation(spec, m_trunc)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for m in 1..=m_trunc {
        let m2 = (m * m) as f64 * PI * PI;
        let a = Complex64::new(spec.lambda_plus(m), 0.0) - lambda;
        let b = Complex64::new(spec.lambda_minus(m), 0.0) - lambda;
        let d = Complex64::new(m2, 0.0) - lambda;
        prod *= a * b / (d * d);
    }
    let sc = sinc_sqrt(lambda);
    Ok(-4.0 * (lambda - spec.lambda0_plus) * prod * sc * sc)
}

/// `Δ˙(λ)/√ᶜ(Δ²(λ) − 4)`; on an open gap `G_k` the side of `ς_k` is taken from
/// `side`.
pub fn delta_dot_over_croot(
    spec: &HillSpectrum,
    lambda: Complex64,
    m_trunc: usize,
    side: Option<Side>,
) -> Result<Complex64> {
    check_truncation(spec, m_trunc)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for m in 1..=m_trunc {
        let s = standard_root(spec, m, lambda, side)?;
        prod *= (Complex64::new(spec.lambda_dot(m), 0.0) - lambda) / s;
    }
    let l0 = Complex64::new(spec.lambda0_plus, 0.0);
    Ok(prod / (Complex64::new(0.0, 2.0) * sqrt_plus(lambda - l0)))
}

/// `F_n` on the side `side` of the open gap `G_n`:
/// `F_n(λ_t^±) = ±cosh⁻¹((−1)ⁿΔ(λ_t)/2)` with the principal (non-negative)
/// inverse hyperbolic cosine; endpoints return 0.
///
/// `q` must be the potential the spectrum was computed from.
pub fn floquet_f_on_gap(
    q: &Potential,
    spec: &HillSpectrum,
    n: usize,
    t: f64,
    side: Side,
    tol: f64,
) -> Result<f64> {
    check_index(spec, n)?;
    if !spec.is_open(n) {
        return Err(Error::validation(format!("gap G_{n} is collapsed; F_{n} is not defined on it")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::validation(format!("gap parameter t = {t} outside [−1, 1]")));
    }
    if t.abs() == 1.0 {
        return Ok(0.0);
    }
    let ev = q.evaluator();
    let lambda = spec.tau(n) + 0.5 * t * spec.gamma(n);
    Ok(side.sign() * acosh_on_gap(&ev, n, lambda, tol, spec.mesh_steps(n))?)
}

fn acosh_on_gap(
    ev: &crate::potentials::PotentialEvaluator,
    n: usize,
    lambda: f64,
    tol: f64,
    mesh: usize,
) -> Result<f64> {
    let m = monodromy_on_mesh(ev, lambda, tol, mesh, false)?;
    let y = if n % 2 == 0 { 0.5 * m.delta() } else { -0.5 * m.delta() };
    // The directly summed Δ carries the ODE error (~tol); the consistency
    // threshold is scaled accordingly.
    let slack = 1e-12f64.max(1e3 * tol);
    if y < 1.0 - slack {
        return Err(Error::numerical(format!(
            "spectral inconsistency: (−1)^n Δ/2 = {y} < 1 inside gap G_{n} at λ = {lambda}"
        )));
    }
    let d = m.delta_sq_minus_4().max(0.0);
    // With y² − 1 = D/4 from the cancellation-free form:
    // cosh⁻¹ y = log1p(x + √D/2), x = y − 1 = (D/4)/(√(1 + D/4) + 1).
    let x = 0.25 * d / ((1.0 + 0.25 * d).sqrt() + 1.0);
    Ok((x + 0.5 * d.sqrt()).ln_1p())
}

/// Gauss–Chebyshev nodes `t_j` and `√(1−t_j²)` shared by all gap integrals.
#[derive(Debug, Clone)]
pub struct GapQuadrature {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl GapQuadrature {
    pub fn new(nodes: usize) -> Self {
        GapQuadrature { t: chebyshev_nodes(nodes), s: chebyshev_node_weights(nodes) }
    }
    pub fn len(&self) -> usize {
        self.t.len()
    }
    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `F_k(λ_{t_j}^−)` at the quadrature nodes of one open gap.
#[derive(Debug, Clone, Serialize)]
pub struct GapTable {
    pub k: usize,
    pub lambda: Vec<f64>,
    pub f_minus: Vec<f64>,
}

/// Samples `F_k` on `G_k^−` at the quadrature nodes.
pub fn gap_table(
    q: &Potential,
    spec: &HillSpectrum,
    k: usize,
    quad: &GapQuadrature,
    tol: f64,
) -> Result<GapTable> {
    check_index(spec, k)?;
    let ev = q.evaluator();
    let (tau, gamma) = (spec.tau(k), spec.gamma(k));
    let lambda: Vec<f64> = quad.t.iter().map(|t| tau + 0.5 * t * gamma).collect();
    let f_minus = if gamma == 0.0 {
        vec![0.0; lambda.len()]
    } else {
        lambda
            .iter()
            .map(|&l| acosh_on_gap(&ev, k, l, tol, spec.mesh_steps(k)).map(|v| -v))
            .collect::<Result<_>>()?
    };
    Ok(GapTable { k, lambda, f_minus })
}

/// The function `ψ_n(λ) = P∏_{m≠n}(σ_m − λ)/(m²π²)` determined by its gap
/// integrals against `1/√ᶜ(Δ² − 4)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiFunction {
    pub n: usize,
    /// `σ_k^n` for `k = 1..=M` (index `k − 1`); entry `n` holds `λ_n^•`.
    pub sigma: Vec<f64>,
    pub prefactor: f64,
    #[serde(rename = "M")]
    pub m_trunc: usize,
    /// `|(1/2π)∮_{Γ_k} ψ_n/√ᶜ − δ_nk|` after the solve, for `k = 1..=M`
    /// (zero for collapsed `k ≠ n`, where the condition holds exactly).
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub nodes: usize,
}

impl PsiFunction {
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[k - 1]
    }

    /// Relative deviation `ρ_n` of the prefactor from `2/(nπ)`.
    pub fn prefactor_deviation(&self) -> f64 {
        self.prefactor * self.n as f64 * PI / 2.0 - 1.0
    }

    /// `ψ_n(λ)` from the truncated product with collapsed-gap tail.
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let mut prod = Complex64::new(self.prefactor, 0.0);
        for m in 1..=self.m_trunc {
            if m == self.n {
                continue;
            }
            let m2 = (m * m) as f64 * PI * PI;
            prod *= (self.sigma(m) - lambda) / m2;
        }
        // tail Π_{m>M}(1 − λ/m²π²) = [sin√λ/√λ] / Π_{m≤M}(1 − λ/m²π²)
        let mut head = Complex64::new(1.0, 0.0);
        for m in 1..=self.m_trunc {
            let m2 = (m * m) as f64 * PI * PI;
            head *= Complex64::new(1.0, 0.0) - lambda / m2;
        }
        prod * sinc_sqrt(lambda) / head
    }
}

/// Reduced integrand `g_{kj}` of `ψ_n/√ᶜ` on gap `k` at node `λ_j`, such that
/// `∮_{Γ_k} f^m ψ_n/√ᶜ = (2π/N)Σ_j f_j^m g_{kj}` for `f` odd across the gap,
/// with the `(σ_k − λ_j)` factor (`k ≠ n`) split off as `(g, h)` where
/// `g = h·(σ_k − λ_j)`.
fn psi_reduced(
    spec: &HillSpectrum,
    n: usize,
    sigma: &[f64],
    m_trunc: usize,
    k: usize,
    lambda: f64,
) -> (f64, f64) {
    let nn = (n * n) as f64 * PI * PI;
    let mut h = nn / (2.0 * (lambda - spec.lambda0_plus).sqrt());
    for m in 1..=m_trunc {
        if m == n || m == k {
            continue;
        }
        let gm = spec.gamma(m);
        if gm == 0.0 && sigma[m - 1] == spec.tau(m) {
            continue;
        }
        h *= (sigma[m - 1] - lambda) / std_root_real(spec.tau(m), gm, lambda);
    }
    if k == n {
        (h, h)
    } else {
        h /= std_root_real(spec.tau(n), spec.gamma(n), lambda);
        (h * (sigma[k - 1] - lambda), h)
    }
}

/// `(1/2π)∮_{Γ_k} ψ_n/√ᶜ` for prefactor 1, plus the Jacobian row with respect
/// to the unknown σ's listed in `unknowns` when requested.
fn psi_condition(
    spec: &HillSpectrum,
    n: usize,
    sigma: &[f64],
    m_trunc: usize,
    k: usize,
    quad: &GapQuadrature,
    unknowns: Option<&[usize]>,
) -> (f64, Vec<f64>) {
    let (tau, gamma) = (spec.tau(k), spec.gamma(k));
    let nodes = quad.len() as f64;
    let mut e = 0.0;
    let mut row = vec![0.0; unknowns.map_or(0, |u| u.len())];
    for &t in &quad.t {
        let lambda = tau + 0.5 * t * gamma;
        let (g, h) = psi_reduced(spec, n, sigma, m_trunc, k, lambda);
        e += g;
        if let Some(u) = unknowns {
            for (i, &m) in u.iter().enumerate() {
                row[i] += if m == k { h } else { g / (sigma[m - 1] - lambda) };
            }
        }
    }
    for r in &mut row {
        *r /= nodes;
    }
    (e / nodes, row)
}

/// Normalization `(1/2π)∮_{Γ_n} ψ_n/√ᶜ` at prefactor 1 when `γ_n = 0`
/// (residue at the double point `τ_n`).
fn psi_residue_norm(spec: &HillSpectrum, n: usize, sigma: &[f64], m_trunc: usize) -> f64 {
    let (g, _) = psi_reduced(spec, n, sigma, m_trunc, n, spec.tau(n));
    g
}

/// Solves for the roots `σ_k^n` (`k ≤ M`, `γ_k > 0`, `k ≠ n`) and the
/// prefactor of `ψ_n`.
///
/// The conditions `(1/2π)∮_{Γ_k} ψ_n/√ᶜ = 0` (`k ≠ n`) do not involve the
/// prefactor and are solved by Newton's method with the analytic Jacobian;
/// the `k = n` condition then fixes the prefactor.
pub fn psi_solve(
    spec: &HillSpectrum,
    n: usize,
    m_trunc: usize,
    tol: f64,
    nodes: usize,
) -> Result<PsiFunction> {
    check_truncation(spec, m_trunc)?;
    if n == 0 || n > m_trunc {
        return Err(Error::validation(format!("ψ index n = {n} must lie in 1..={m_trunc}")));
    }
    if !(tol > 0.0) || nodes < 4 {
        return Err(Error::validation("ψ solve needs tol > 0 and at least 4 nodes"));
    }
    let quad = GapQuadrature::new(nodes);
    let mut sigma: Vec<f64> = (1..=m_trunc).map(|k| spec.tau(k)).collect();
    sigma[n - 1] = spec.lambda_dot(n);
    let unknowns: Vec<usize> = (1..=m_trunc).filter(|&k| k != n && spec.is_open(k)).collect();
    let mut iterations = 0;
    if !unknowns.is_empty() {
        let mut converged = false;
        let mut last_res = f64::INFINITY;
        for it in 0..=50 {
            let mut jac = DMatrix::<f64>::zeros(unknowns.len(), unknowns.len());
            let mut rhs = DVector::<f64>::zeros(unknowns.len());
            for (i, &k) in unknowns.iter().enumerate() {
                let (e, row) = psi_condition(spec, n, &sigma, m_trunc, k, &quad, Some(&unknowns));
                rhs[i] = -e;
                for (j, v) in row.into_iter().enumerate() {
                    jac[(i, j)] = v;
                }
            }
            // Residuals are measured after normalization by the k = n
            // condition, i.e. with the prefactor that the final step assigns.
            let norm_e = psi_condition(spec, n, &sigma, m_trunc, n, &quad, None).0;
            let norm = if spec.is_open(n) {
                norm_e
            } else {
                psi_residue_norm(spec, n, &sigma, m_trunc)
            };
            last_res = rhs.iter().map(|v| (v / norm).abs()).fold(0.0, f64::max);
            if last_res <= tol {
                converged = true;
                iterations = it;
                break;
            }
            if it == 50 {
                break;
            }
            let delta = jac.lu().solve(&rhs).ok_or_else(|| {
                Error::numerical(format!("singular Jacobian in the ψ_{n} root solve"))
            })?;
            for (i, &k) in unknowns.iter().enumerate() {
                // Keep each root inside a generous neighbourhood of its gap.
                let g = spec.gamma(k);
                let lo = spec.tau(k) - 2.0 * g;
                let hi = spec.tau(k) + 2.0 * g;
                sigma[k - 1] = (sigma[k - 1] + delta[i]).clamp(lo, hi);
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "ψ_{n} root solve did not converge in 50 iterations (max residual {last_res:.3e})"
            )));
        }
    }
    let norm = if spec.is_open(n) {
        psi_condition(spec, n, &sigma, m_trunc, n, &quad, None).0
    } else {
        psi_residue_norm(spec, n, &sigma, m_trunc)
    };
    if !(norm.is_finite() && norm != 0.0) {
        return Err(Error::numerical(format!("ψ_{n} normalization integral vanished")));
    }
    let prefactor = 1.0 / norm;
    let mut residuals = vec![0.0; m_trunc];
    for k in 1..=m_trunc {
        if k == n {
            residuals[k - 1] = if spec.is_open(n) {
                (prefactor * psi_condition(spec, n, &sigma, m_trunc, n, &quad, None).0 - 1.0).abs()
            } else {
                (prefactor * psi_residue_norm(spec, n, &sigma, m_trunc) - 1.0).abs()
            };
        } else if spec.is_open(k) {
            residuals[k - 1] =
                (prefactor * psi_condition(spec, n, &sigma, m_trunc, k, &quad, None).0).abs();
        }
    }
    Ok(PsiFunction {
        n,
        sigma,
        prefactor,
        m_trunc,
        residuals,
        iterations,
        nodes,
    })
}

/// `(1/2π)∮_{Γ_k} ψ_n/√ᶜ(Δ² − 4)` for a solved (or modified) ψ-function.
///
/// For collapsed `k` the integrand is analytic inside `Γ_k` unless `k = n`
/// (residue at `τ_n`), or unless `σ_k ≠ τ_k` (simple pole with residue
/// proportional to `σ_k − τ_k`).
pub fn psi_gap_integral(spec: &HillSpectrum, psi: &PsiFunction, k: usize, nodes: usize) -> Result<f64> {
    check_index(spec, k)?;
    if k > psi.m_trunc {
        return Err(Error::validation(format!("gap {k} beyond ψ truncation {}", psi.m_trunc)));
    }
    let quad = GapQuadrature::new(nodes);
    let n = psi.n;
    let v = if spec.is_open(k) {
        psi_condition(spec, n, &psi.sigma, psi.m_trunc, k, &quad, None).0
    } else if k == n {
        psi_residue_norm(spec, n, &psi.sigma, psi.m_trunc)
    } else {
        // Residue of (σ_k − λ)/(τ_k − λ)·(rest) at τ_k: (σ_k − τ_k)·rest(τ_k)
        let (_, h) = psi_reduced(spec, n, &psi.sigma, psi.m_trunc, k, spec.tau(k));
        h * (psi.sigma(k) - spec.tau(k))
    };
    Ok(psi.prefactor * v)
}

/// Reduced integrand values `g_{kj}` of `ψ_n/√ᶜ` on open gap `k` at the nodes of
/// `quad` (prefactor included); see [`gap_moment`].
pub fn psi_reduced_on_gap(spec: &HillSpectrum, psi: &PsiFunction, k: usize, quad: &GapQuadrature) -> Vec<f64> {
    let (tau, gamma) = (spec.tau(k), spec.gamma(k));
    quad.t
        .iter()
        .map(|t| {
            let lambda = tau + 0.5 * t * gamma;
            psi.prefactor * psi_reduced(spec, psi.n, &psi.sigma, psi.m_trunc, k, lambda).0
        })
        .collect()
}

/// `∮_{Γ_k} F_k^m ψ_n/√ᶜ = (2π/N)Σ_j F_k(λ_j^−)^m g_{kj}` for even `m`.
pub fn gap_moment(reduced: &[f64], table: &GapTable, m: u32) -> f64 {
    let n = reduced.len() as f64;
    2.0 * PI / n
        * reduced
            .iter()
            .zip(&table.f_minus)
            .map(|(g, f)| g * f.powi(m as i32))
            .sum::<f64>()
}
