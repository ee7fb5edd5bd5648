//! Actions, contour moments, Hamiltonians and the KdV/KdV2 frequencies.
//!
//! All starred (renormalized) quantities are computed on the zero-mean part
//! `q₀ = q − c` of a potential; [`analyze`] performs the mean shift and the
//! shift formulas restore the full frequencies:
//!
//! * `ω_n^(1) = (2nπ)³ + 6c(2nπ) + ω_n^(1)★(q₀)`, `ω_n^(1)★ = −12Σ_k kΩ_nk^(2)`;
//! * `ω_n^(2) = (2nπ)⁵ + 10c(2nπ)³ + 30c²(2nπ) + 20(2nπ)H₀(q₀) + ω_n^(2)★(q₀)
//!   + 10c·ω_n^(1)★(q₀)`, `ω_n^(2)★ = −160π²Σ_k k³Ω_nk^(2) + 80Σ_k kΩ_nk^(4)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{periodic_spectrum, HillSpectrum, DEFAULT_TOL};
use crate::potentials::Potential;
use crate::roots::{
    gap_moment, gap_table, psi_reduced_on_gap, psi_solve, GapQuadrature, GapTable, PsiFunction,
    DEFAULT_NODES,
};

/// Truncations and tolerances for the spectral pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Frequencies are reported for `1 ≤ n ≤ N`.
    #[serde(rename = "N")]
    pub n_max: usize,
    /// Product truncation `M` (spectrum computed through `M`).
    #[serde(rename = "M")]
    pub m_trunc: usize,
    /// Moment summation truncation `K ≤ M`.
    #[serde(rename = "K")]
    pub k_max: usize,
    /// Local ODE tolerance.
    pub tol: f64,
    /// Gauss–Chebyshev nodes per gap integral.
    pub nodes: usize,
    /// Tolerance of the ψ root solve.
    pub psi_tol: f64,
}

impl AnalysisConfig {
    /// Defaults for a given `N`: `M = K = max(2N, 32)`.
    pub fn new(n_max: usize) -> Self {
        let m = (2 * n_max).max(32);
        AnalysisConfig {
            n_max,
            m_trunc: m,
            k_max: m,
            tol: DEFAULT_TOL,
            nodes: DEFAULT_NODES,
            psi_tol: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::validation("N must be at least 1"));
        }
        if self.n_max > self.m_trunc {
            return Err(Error::validation(format!("N = {} exceeds M = {}", self.n_max, self.m_trunc)));
        }
        if self.k_max == 0 || self.k_max > self.m_trunc {
            return Err(Error::validation(format!("K = {} must lie in 1..=M = {}", self.k_max, self.m_trunc)));
        }
        if !(self.tol > 0.0 && self.psi_tol > 0.0) {
            return Err(Error::validation("tolerances must be positive"));
        }
        if self.nodes < 4 {
            return Err(Error::validation("at least 4 quadrature nodes are required"));
        }
        Ok(())
    }
}

/// Actions `I_n`, `1 ≤ n ≤ N`, with node-doubling error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    #[serde(rename = "I")]
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Entries whose error estimate exceeds `1e-6·max(I_n, 1e-12)`.
    pub flagged: Vec<usize>,
}

impl ActionVector {
    pub fn get(&self, n: usize) -> f64 {
        self.values[n - 1]
    }
}

fn action_quadrature(spec: &HillSpectrum, n: usize, nodes: usize) -> f64 {
    let quad = GapQuadrature::new(nodes);
    let (tau, gamma) = (spec.tau(n), spec.gamma(n));
    let tn = 2.0 * (spec.lambda_dot(n) - tau) / gamma;
    let npi = n as f64 * PI;
    let mut acc = 0.0;
    for &t in &quad.t {
        let lambda = tau + 0.5 * t * gamma;
        let mut chi = npi / (lambda - spec.lambda0_plus).sqrt();
        for m in 1..=spec.n_max {
            if m == n || !spec.is_open(m) {
                continue;
            }
            let w = spec.tau(m) - lambda;
            let g = spec.gamma(m);
            let s = w * (1.0 - g * g / (4.0 * w * w)).sqrt();
            chi *= (spec.lambda_dot(m) - lambda) / s;
        }
        acc += (t - tn) * (t - tn) * chi;
    }
    // 8nπI/γ² = (2/π)·(π/N)Σ(t_j − t_n)²χ(λ_j)
    let ratio = 2.0 * acc / nodes as f64;
    ratio * gamma * gamma / (8.0 * npi)
}

/// Action `I_n` and its node-doubling error estimate; collapsed gaps give 0.
///
/// Uses `8nπI_n/γ_n² = (2/π)∫(t − t_n)²χ_n(λ_t)/√(1−t²)dt` with
/// `χ_n(λ) = nπ/√(λ − λ₀⁺)·∏_{m≠n}(λ_m^• − λ)/ς_m(λ)` truncated at the size
/// of the spectrum, `t_n = 2(λ_n^• − τ_n)/γ_n`.
pub fn action(spec: &HillSpectrum, n: usize, nodes: usize) -> Result<(f64, f64)> {
    if n == 0 || n > spec.n_max {
        return Err(Error::validation(format!("action index {n} outside 1..={}", spec.n_max)));
    }
    if !spec.is_open(n) {
        return Ok((0.0, 0.0));
    }
    let a = action_quadrature(spec, n, nodes);
    let b = action_quadrature(spec, n, 2 * nodes);
    Ok((b, (a - b).abs()))
}

/// Actions for `1 ≤ n ≤ N`.
pub fn actions(spec: &HillSpectrum, n_max: usize, nodes: usize) -> Result<ActionVector> {
    let pairs: Vec<(f64, f64)> = (1..=n_max).map(|n| action(spec, n, nodes)).collect::<Result<_>>()?;
    let flagged = pairs
        .iter()
        .enumerate()
        .filter(|(_, (i, e))| *e > 1e-6 * i.max(1e-12))
        .map(|(j, _)| j + 1)
        .collect();
    Ok(ActionVector {
        values: pairs.iter().map(|p| p.0).collect(),
        errors: pairs.iter().map(|p| p.1).collect(),
        flagged,
    })
}

/// Contour moments `Ω_nk^(2)`, `Ω_nk^(4)` (`n ≤ N`, `k ≤ K`) and `R_n^(m)`
/// (`m = 1, 3, 5`, `n ≤ K`). Odd Ω and even R moments vanish identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    #[serde(rename = "N")]
    pub n_max: usize,
    #[serde(rename = "K")]
    pub k_max: usize,
    /// `omega2[n−1][k−1] = Ω_nk^(2)`.
    pub omega2: Vec<Vec<f64>>,
    pub omega4: Vec<Vec<f64>>,
    /// `omega0[n−1][k−1] = Ω_nk^(0)` (should be `2πδ_nk`).
    pub omega0: Vec<Vec<f64>>,
    pub r1: Vec<f64>,
    pub r3: Vec<f64>,
    pub r5: Vec<f64>,
}

impl MomentTable {
    /// `Ω_nk^(m)`; odd `m` returns exactly 0.
    pub fn omega(&self, m: u32, n: usize, k: usize) -> f64 {
        match m {
            0 => self.omega0[n - 1][k - 1],
            2 => self.omega2[n - 1][k - 1],
            4 => self.omega4[n - 1][k - 1],
            m if m % 2 == 1 => 0.0,
            _ => f64::NAN,
        }
    }

    /// `R_n^(m)`; even `m` returns exactly 0.
    pub fn r(&self, m: u32, n: usize) -> f64 {
        match m {
            1 => self.r1[n - 1],
            3 => self.r3[n - 1],
            5 => self.r5[n - 1],
            m if m % 2 == 0 => 0.0,
            _ => f64::NAN,
        }
    }
}

/// `R_n^(m) = −(1/π)∮_{Γ_n} F_n^m dλ = −(γ_n/N)Σ_j F_n(λ_j^−)^m √(1−t_j²)`.
fn r_moment(table: &GapTable, quad: &GapQuadrature, gamma: f64, m: u32) -> f64 {
    let n = quad.len() as f64;
    -gamma / n
        * table
            .f_minus
            .iter()
            .zip(&quad.s)
            .map(|(f, s)| f.powi(m as i32) * s)
            .sum::<f64>()
}

/// Samples `F_k` on all open gaps `k ≤ K` (closed gaps get `None`).
pub fn gap_tables(
    q0: &Potential,
    spec: &HillSpectrum,
    k_max: usize,
    nodes: usize,
    tol: f64,
) -> Result<Vec<Option<GapTable>>> {
    let quad = GapQuadrature::new(nodes);
    (1..=k_max)
        .into_par_iter()
        .map(|k| {
            if spec.is_open(k) {
                gap_table(q0, spec, k, &quad, tol).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Computes the moment table from solved ψ-functions (`psis[n−1] = ψ_n`).
pub fn moments(
    spec: &HillSpectrum,
    psis: &[PsiFunction],
    tables: &[Option<GapTable>],
    nodes: usize,
) -> Result<MomentTable> {
    let k_max = tables.len();
    let n_max = psis.len();
    let quad = GapQuadrature::new(nodes);
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = psis
        .par_iter()
        .map(|psi| {
            let mut o0 = vec![0.0; k_max];
            let mut o2 = vec![0.0; k_max];
            let mut o4 = vec![0.0; k_max];
            for k in 1..=k_max {
                match &tables[k - 1] {
                    Some(table) => {
                        let g = psi_reduced_on_gap(spec, psi, k, &quad);
                        o0[k - 1] = gap_moment(&g, table, 0);
                        o2[k - 1] = gap_moment(&g, table, 2);
                        o4[k - 1] = gap_moment(&g, table, 4);
                    }
                    None => {
                        if k == psi.n {
                            o0[k - 1] = 2.0 * PI;
                        }
                    }
                }
            }
            (o0, o2, o4)
        })
        .collect();
    let mut r = [vec![0.0; k_max], vec![0.0; k_max], vec![0.0; k_max]];
    for k in 1..=k_max {
        if let Some(table) = &tables[k - 1] {
            for (i, m) in [1u32, 3, 5].iter().enumerate() {
                r[i][k - 1] = r_moment(table, &quad, spec.gamma(k), *m);
            }
        }
    }
    let [r1, r3, r5] = r;
    Ok(MomentTable {
        n_max,
        k_max,
        omega0: rows.iter().map(|r| r.0.clone()).collect(),
        omega2: rows.iter().map(|r| r.1.clone()).collect(),
        omega4: rows.iter().map(|r| r.2.clone()).collect(),
        r1,
        r3,
        r5,
    })
}

/// Odd moment `Ω_nk^(1)` evaluated from both gap sides without the parity
/// short-circuit (a consistency probe; vanishes up to rounding).
pub fn odd_moment_probe(spec: &HillSpectrum, psi: &PsiFunction, table: &GapTable, nodes: usize) -> f64 {
    let quad = GapQuadrature::new(nodes);
    let g = psi_reduced_on_gap(spec, psi, table.k, &quad);
    // On G^+ both F_k and ψ/√ᶜ flip sign, so the (f^− − f^+) integrand cancels.
    let n = nodes as f64;
    PI / n
        * g.iter()
            .zip(&table.f_minus)
            .map(|(g, f)| g * f - (-g) * (-f))
            .sum::<f64>()
}

/// Frequencies for `1 ≤ n ≤ N` with truncation-tail estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub mean: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub n: Vec<usize>,
    #[serde(rename = "I")]
    pub actions: Vec<f64>,
    pub omega1: Vec<f64>,
    pub omega1_star: Vec<f64>,
    pub omega2: Vec<f64>,
    pub omega2_star: Vec<f64>,
    /// Estimated magnitude of the dropped `k > K` terms of `ω_n^(1)★`.
    pub tail_estimate: Vec<f64>,
    /// Same for `ω_n^(2)★`.
    pub tail_estimate2: Vec<f64>,
    /// Calibrated decay constants (with factor-2 safety) used in the tails.
    pub tail_constant: Vec<f64>,
    /// Indices whose tail estimate exceeds 10% of `|ω★|`.
    pub warnings: Vec<usize>,
}

/// `ω_n^(1)★ = −12Σ_{k≤K} kΩ_nk^(2)`.
pub fn omega1_star(moments: &MomentTable, n: usize) -> f64 {
    -12.0 * (1..=moments.k_max).map(|k| k as f64 * moments.omega2[n - 1][k - 1]).sum::<f64>()
}

/// `ω_n^(2)★ = −160π²Σ_{k≤K} k³Ω_nk^(2) + 80Σ_{k≤K} kΩ_nk^(4)`.
pub fn omega2_star(moments: &MomentTable, n: usize) -> f64 {
    let mut s = 0.0;
    for k in 1..=moments.k_max {
        let kf = k as f64;
        s += -160.0 * PI * PI * kf.powi(3) * moments.omega2[n - 1][k - 1]
            + 80.0 * kf * moments.omega4[n - 1][k - 1];
    }
    s
}

/// Tail estimates for the dropped `k > K` terms from the decay law
/// `|kΩ_nk^(2)| ≲ C·n/|n² − k²|·k⁻²γ_k³` with `C` calibrated on the computed
/// `k ≠ n` terms (factor 2 safety) and `γ_k ≤ max(γ_K, 1e-9)` beyond `K`.
fn tail_estimates(spec: &HillSpectrum, moments: &MomentTable, n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let mut c: f64 = 0.0;
    for k in 1..=moments.k_max {
        let g = spec.gamma(k);
        if k == n || g == 0.0 {
            continue;
        }
        let kf = k as f64;
        let law = nf / (nf * nf - kf * kf).abs() * g.powi(3) / (kf * kf);
        let v = (kf * moments.omega2[n - 1][k - 1]).abs();
        if law > 0.0 && v.is_finite() {
            c = c.max(v / law);
        }
    }
    let c = 2.0 * c.max(1.0);
    let kk = moments.k_max as f64;
    let gamma_hat = spec.gamma(moments.k_max).max(crate::hill::COLLAPSE_THRESHOLD);
    // Σ_{k>K} n/(k² − n²)k⁻² ≈ n/(3K³);  Σ_{k>K} n/(k² − n²) ≈ n/K  (K > n)
    let t1 = 12.0 * c * gamma_hat.powi(3) * nf / (3.0 * kk.powi(3));
    let t2 = 160.0 * PI * PI * c * gamma_hat.powi(3) * nf / kk;
    (t1, t2, c)
}

/// Hamiltonian values from direct quadrature and from moment sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianValues {
    #[serde(rename = "H0")]
    pub h0: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    /// `H₁★ = −Σ4(2nπ)R_n^(3)` (moment route).
    #[serde(rename = "H1_star")]
    pub h1_star: f64,
    /// `H₁ − Σ(2nπ)³I_n` (subtraction route).
    #[serde(rename = "H1_star_subtracted")]
    pub h1_star_subtracted: f64,
    /// `H₂★ = Σ(−(40/3)(2nπ)³R_n^(3) + 16(2nπ)R_n^(5))`.
    #[serde(rename = "H2_star")]
    pub h2_star: f64,
    /// `H₂ − Σ(2nπ)⁵I_n − 10H₀²` (direct route).
    #[serde(rename = "H2_star_subtracted")]
    pub h2_star_subtracted: f64,
    /// `Σ(2nπ)I_n` (should equal `H₀`).
    #[serde(rename = "H0_from_actions")]
    pub h0_from_actions: f64,
    /// Set when the two `H₁★` routes disagree beyond `1e-5` relative.
    pub h1_star_flag: bool,
}

/// `(H₀, H₁, H₂)` by a 4096-point trapezoid rule with exact Fourier
/// derivatives.
pub fn direct_hamiltonians(q: &Potential) -> (f64, f64, f64) {
    let n = 4096;
    let (mut h0, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let [u, ux, uxx] = q.evaluate_derivatives(j as f64 / n as f64);
        h0 += u * u;
        h1 += ux * ux + 2.0 * u * u * u;
        h2 += uxx * uxx + 10.0 * u * ux * ux + 5.0 * u.powi(4);
    }
    let w = 0.5 / n as f64;
    (h0 * w, h1 * w, h2 * w)
}

/// Result of the full spectral pipeline for one potential.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub config: AnalysisConfig,
    pub mean: f64,
    #[serde(skip)]
    pub q0: Potential,
    /// Spectrum of the zero-mean part, through `M`.
    pub spectrum: HillSpectrum,
    /// Actions through `M`.
    pub actions: ActionVector,
    pub psis: Vec<PsiFunction>,
    pub moments: MomentTable,
}

/// Runs spectrum → actions → ψ solves → moments for `q` (mean removed first).
pub fn analyze(q: &Potential, cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    let q0 = q.zero_mean();
    let spectrum = periodic_spectrum(&q0, cfg.m_trunc, cfg.tol)?;
    analyze_with_spectrum(q, cfg, spectrum)
}

/// As [`analyze`] with a precomputed spectrum of the zero-mean part.
pub fn analyze_with_spectrum(q: &Potential, cfg: &AnalysisConfig, spectrum: HillSpectrum) -> Result<Analysis> {
    cfg.validate()?;
    if spectrum.n_max < cfg.m_trunc {
        return Err(Error::validation("spectrum does not reach the truncation M"));
    }
    let q0 = q.zero_mean();
    let acts = actions(&spectrum, cfg.m_trunc, cfg.nodes)?;
    let psis: Vec<PsiFunction> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| psi_solve(&spectrum, n, cfg.m_trunc, cfg.psi_tol, cfg.nodes))
        .collect::<Result<_>>()?;
    let tables = gap_tables(&q0, &spectrum, cfg.k_max, cfg.nodes, cfg.tol)?;
    let moments = moments(&spectrum, &psis, &tables, cfg.nodes)?;
    Ok(Analysis { config: *cfg, mean: q.mean(), q0, spectrum, actions: acts, psis, moments })
}

impl Analysis {
    /// Frequencies `ω^(1)`, `ω^(2)` and their starred parts for `n ≤ N`.
    pub fn frequencies(&self) -> FrequencyReport {
        let c = self.mean;
        let (h0, _, _) = direct_hamiltonians(&self.q0);
        let mut rep = FrequencyReport {
            mean: c,
            k_max: self.moments.k_max,
            n: Vec::new(),
            actions: Vec::new(),
            omega1: Vec::new(),
            omega1_star: Vec::new(),
            omega2: Vec::new(),
            omega2_star: Vec::new(),
            tail_estimate: Vec::new(),
            tail_estimate2: Vec::new(),
            tail_constant: Vec::new(),
            warnings: Vec::new(),
        };
        for n in 1..=self.config.n_max {
            let k = 2.0 * PI * n as f64;
            let w1s = omega1_star(&self.moments, n);
            let w2s = omega2_star(&self.moments, n);
            let (t1, t2, cc) = tail_estimates(&self.spectrum, &self.moments, n);
            rep.n.push(n);
            rep.actions.push(self.actions.get(n));
            rep.omega1_star.push(w1s);
            rep.omega2_star.push(w2s);
            rep.omega1.push(k.powi(3) + 6.0 * c * k + w1s);
            rep.omega2.push(
                k.powi(5) + 10.0 * c * k.powi(3) + 30.0 * c * c * k + 20.0 * k * h0 + w2s + 10.0 * c * w1s,
            );
            rep.tail_estimate.push(t1);
            rep.tail_estimate2.push(t2);
            rep.tail_constant.push(cc);
            if (w1s != 0.0 && t1 > 0.1 * w1s.abs()) || (w2s != 0.0 && t2 > 0.1 * w2s.abs()) {
                rep.warnings.push(n);
            }
        }
        rep
    }

    /// Direct and moment-route Hamiltonians of the zero-mean part.
    pub fn hamiltonians(&self) -> HamiltonianValues {
        let (h0, h1, h2) = direct_hamiltonians(&self.q0);
        let k_max = self.moments.k_max;
        let mut h1s = 0.0;
        let mut h2s = 0.0;
        let mut sum1 = 0.0;
        let mut sum3 = 0.0;
        let mut sum5 = 0.0;
        for n in 1..=k_max {
            let k = 2.0 * PI * n as f64;
            let i = self.actions.get(n);
            h1s += -4.0 * k * self.moments.r3[n - 1];
            h2s += -(40.0 / 3.0) * k.powi(3) * self.moments.r3[n - 1] + 16.0 * k * self.moments.r5[n - 1];
            sum1 += k * i;
            sum3 += k.powi(3) * i;
            sum5 += k.powi(5) * i;
        }
        let h1_sub = h1 - sum3;
        HamiltonianValues {
            h0,
            h1,
            h2,
            h1_star: h1s,
            h1_star_subtracted: h1_sub,
            h2_star: h2s,
            h2_star_subtracted: h2 - sum5 - 10.0 * h0 * h0,
            h0_from_actions: sum1,
            h1_star_flag: (h1s - h1_sub).abs() > 1e-5 * h1s.abs().max(1e-14),
        }
    }
}

/// Which frequency family a Jacobian refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Kdv,
    Kdv2,
}

/// `dω★/dI` over an index set from central finite differences along a
/// parametrized potential family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianReport {
    pub indices: Vec<usize>,
    /// Row-major `J[i][j] = ∂ω★_{A_i}/∂I_{A_j}`.
    pub jacobian: Vec<Vec<f64>>,
    /// `‖J − Jᵀ‖_F / ‖J‖_F`.
    pub symmetry_defect: f64,
    /// Eigenvalues of `(J + Jᵀ)/2`, ascending.
    pub symmetric_eigenvalues: Vec<f64>,
    pub negative_definite: bool,
}

/// Central-difference Jacobian of `ω★_A` with respect to `I_A`.
///
/// `family(a)` builds the potential for parameters `a` (one per index of
/// `indices`, each primarily moving the corresponding gap); derivatives are
/// taken at `a0` with step `h`.
pub fn frequency_jacobian<F>(
    family: F,
    a0: &[f64],
    indices: &[usize],
    h: f64,
    which: Equation,
    cfg: &AnalysisConfig,
) -> Result<JacobianReport>
where
    F: Fn(&[f64]) -> Result<Potential> + Sync,
{
    let d = indices.len();
    if d == 0 || a0.len() != d {
        return Err(Error::validation("Jacobian needs one family parameter per index"));
    }
    let n_needed = *indices.iter().max().unwrap();
    if cfg.n_max < n_needed {
        return Err(Error::validation("configuration N does not cover the index set"));
    }
    let eval = |a: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let q = family(a)?;
        let an = analyze(&q, cfg)?;
        let rep = an.frequencies();
        let i: Vec<f64> = indices.iter().map(|&n| rep.actions[n - 1]).collect();
        let w: Vec<f64> = indices
            .iter()
            .map(|&n| match which {
                Equation::Kdv => rep.omega1_star[n - 1],
                Equation::Kdv2 => rep.omega2_star[n - 1],
            })
            .collect();
        Ok((i, w))
    };
    let cols: Vec<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut ap = a0.to_vec();
            let mut am = a0.to_vec();
            ap[j] += h;
            am[j] -= h;
            Ok((eval(&ap)?, eval(&am)?))
        })
        .collect::<Result<_>>()?;
    let mut di = DMatrix::<f64>::zeros(d, d);
    let mut dw = DMatrix::<f64>::zeros(d, d);
    for (j, ((ip, wp), (im, wm))) in cols.iter().enumerate() {
        for i in 0..d {
            di[(i, j)] = (ip[i] - im[i]) / (2.0 * h);
            dw[(i, j)] = (wp[i] - wm[i]) / (2.0 * h);
        }
    }
    let sv = di.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::numerical(format!(
            "action increments are ill-conditioned (singular values {smin:e} / {smax:e})"
        )));
    }
    let inv = di
        .try_inverse()
        .ok_or_else(|| Error::numerical("action increment matrix is singular"))?;
    let jac = dw * inv;
    let jt = jac.transpose();
    let defect = (&jac - &jt).norm() / jac.norm();
    let sym = (&jac + &jt) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let negative_definite = ev.iter().all(|&v| v < 0.0);
    Ok(JacobianReport {
        indices: indices.to_vec(),
        jacobian: (0..d).map(|i| (0..d).map(|j| jac[(i, j)]).collect()).collect(),
        symmetry_defect: defect,
        symmetric_eigenvalues: ev,
        negative_definite,
    })
}
