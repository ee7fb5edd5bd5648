//! Fourth-order Birkhoff normal forms of the KdV and KdV2 Hamiltonians, the
//! KdV2 C-matrix nondegeneracy machinery and exact resonance scanning.
//!
//! With mean `c` and actions `I`:
//!
//! * KdV: `H₁ = Σλ_n^(1)I_n − 3ΣI_n² + …`, `λ_n^(1) = (2nπ)³ + 6c(2nπ)`;
//! * KdV2: `H₂ = Σλ_n^(2)I_n + 10H₀² − 10Σ(2nπ)²I_n² − 30cΣI_n² + …`,
//!   `λ_n^(2) = (2nπ)⁵ + 10c(2nπ)³ + 30c²(2nπ)`, `H₀ = Σ(2nπ)I_n`.
//!
//! The C-matrices are minus the Hessians of the quartic parts:
//! `C^(1) = 6·Id` and `C^(2)_ii = 60c`, `C^(2)_ij = −20(2iπ)(2jπ)` (`i ≠ j`).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::Equation;

/// Birkhoff normal-form coefficients at mean `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnfModel {
    pub c: f64,
}

impl BnfModel {
    pub fn new(c: f64) -> Self {
        BnfModel { c }
    }

    /// `λ_n^(1) = (2nπ)³ + 6c(2nπ)`.
    pub fn lambda1(&self, n: usize) -> f64 {
        let k = 2.0 * PI * n as f64;
        k.powi(3) + 6.0 * self.c * k
    }

    /// `λ_n^(2) = (2nπ)⁵ + 10c(2nπ)³ + 30c²(2nπ)`.
    pub fn lambda2(&self, n: usize) -> f64 {
        let k = 2.0 * PI * n as f64;
        k.powi(5) + 10.0 * self.c * k.powi(3) + 30.0 * self.c * self.c * k
    }

    /// `C^(1)_ij = 6δ_ij`.
    pub fn c1(&self, i: usize, j: usize) -> f64 {
        if i == j {
            6.0
        } else {
            0.0
        }
    }

    /// `C^(2)_ij`: `60c` on the diagonal, `−20(2iπ)(2jπ)` off it.
    pub fn c2(&self, i: usize, j: usize) -> f64 {
        if i == j {
            60.0 * self.c
        } else {
            -80.0 * PI * PI * (i * j) as f64
        }
    }
}

/// Quartic normal-form value and its action gradient (the predicted
/// frequencies) for actions `I_n = actions[n − 1]`.
pub fn bnf_predict(actions: &[f64], c: f64, which: Equation) -> Result<(f64, Vec<f64>)> {
    if actions.iter().any(|&i| !(i >= 0.0) || !i.is_finite()) {
        return Err(Error::validation("actions must be finite and non-negative"));
    }
    let model = BnfModel::new(c);
    let k = |n: usize| 2.0 * PI * n as f64;
    match which {
        Equation::Kdv => {
            let mut h = 0.0;
            let mut w = Vec::with_capacity(actions.len());
            for (j, &i) in actions.iter().enumerate() {
                let n = j + 1;
                h += model.lambda1(n) * i - 3.0 * i * i;
                w.push(model.lambda1(n) - 6.0 * i);
            }
            Ok((h, w))
        }
        Equation::Kdv2 => {
            let h0: f64 = actions.iter().enumerate().map(|(j, &i)| k(j + 1) * i).sum();
            let mut h = 10.0 * h0 * h0;
            let mut w = Vec::with_capacity(actions.len());
            for (j, &i) in actions.iter().enumerate() {
                let n = j + 1;
                let kn = k(n);
                h += model.lambda2(n) * i - 10.0 * kn * kn * i * i - 30.0 * c * i * i;
                w.push(model.lambda2(n) + 20.0 * h0 * kn - 20.0 * kn * kn * i - 60.0 * c * i);
            }
            Ok((h, w))
        }
    }
}

fn check_index_set(a: &[usize]) -> Result<Vec<usize>> {
    if a.is_empty() {
        return Err(Error::validation("index set A must be nonempty"));
    }
    let mut v = a.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != a.len() || v[0] == 0 {
        return Err(Error::validation("index set A must consist of distinct positive integers"));
    }
    Ok(v)
}

/// `det C_A^(2)` via the rank-one structure `C_A = D − B`, `D_i = 80π²i² + 60c`,
/// `B_ij = 80π²ij`: `det C_A = ΠD_i − Σ_i B_ii Π_{j≠i} D_j`.
pub fn det_ca(c: f64, a: &[usize]) -> Result<f64> {
    let a = check_index_set(a)?;
    let d: Vec<f64> = a.iter().map(|&i| 80.0 * PI * PI * (i * i) as f64 + 60.0 * c).collect();
    let prod: f64 = d.iter().product();
    let mut corr = 0.0;
    for (idx, &i) in a.iter().enumerate() {
        let bii = 80.0 * PI * PI * (i * i) as f64;
        let others: f64 = d.iter().enumerate().filter(|(j, _)| *j != idx).map(|(_, v)| v).product();
        corr += bii * others;
    }
    Ok(prod - corr)
}

/// `Σ_{i∈A} 1/(1 + 3c/(4π²i²)) − 1`, whose zeros are the singular values of `c`.
fn secular(c: f64, a: &[usize]) -> f64 {
    a.iter().map(|&i| 1.0 / (1.0 + 3.0 * c / (4.0 * PI * PI * (i * i) as f64))).sum::<f64>() - 1.0
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The set `𝒮_A` of means `c` with `det C_A^(2) = 0`, sorted ascending.
///
/// For `|A| ≥ 2` there is one root in each interval between consecutive poles
/// `−(4/3)π²i²` and one positive root; a singleton gives `{0}`.
pub fn singular_set(a: &[usize]) -> Result<Vec<f64>> {
    let a = check_index_set(a)?;
    if a.len() == 1 {
        return Ok(vec![0.0]);
    }
    let poles: Vec<f64> = a.iter().map(|&i| -(4.0 / 3.0) * PI * PI * (i * i) as f64).collect();
    let f = |c: f64| secular(c, &a);
    let mut roots = Vec::with_capacity(a.len());
    // Intervals (poles[ν], poles[ν−1]) for ν = 1..|A|−1 (poles descending in ν).
    for nu in (1..a.len()).rev() {
        let lo = poles[nu];
        let hi = poles[nu - 1];
        let eps = 1e-12 * (hi - lo);
        roots.push(bisect(f, lo + eps, hi - eps));
    }
    let hi = a.iter().map(|&i| (4.0 / 3.0) * PI * PI * (i * i) as f64).sum::<f64>() + 1.0;
    roots.push(bisect(f, 0.0, hi));
    if roots.len() != a.len() || roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::numerical("singular set root count differs from |A|"));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}

/// Mean value `c = (p/q)·π²` on the exact lattice used by the resonance scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalMean {
    pub p: i64,
    pub q: i64,
}

impl RationalMean {
    pub fn zero() -> Self {
        RationalMean { p: 0, q: 1 }
    }
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64 * PI * PI
    }
}

/// Integer vector `k = k_A + k_Z` with sparse support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceVector {
    /// `(index, k_index)` on `A`.
    pub k_a: Vec<(usize, i64)>,
    /// `(index, k_index)` on the complement window.
    pub k_z: Vec<(usize, i64)>,
}

impl ResonanceVector {
    /// `|k_Z| = Σ_{j∈Z}|k_j|`.
    pub fn z_weight(&self) -> i64 {
        self.k_z.iter().map(|(_, v)| v.abs()).sum()
    }
    fn entries(&self) -> impl Iterator<Item = &(usize, i64)> {
        self.k_a.iter().chain(self.k_z.iter())
    }
}

/// Nondegeneracy certificate of a resonance scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCertificate {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    pub c: f64,
    #[serde(rename = "Kmax")]
    pub kmax: i64,
    pub window: usize,
    pub candidates: u64,
    pub offenders: Vec<ResonanceVector>,
}

/// `λ_n^(2)·q²/π⁵ = 32n⁵q² + 80pqn³ + 60p²n` (exact).
fn scaled_lambda2(n: usize, c: RationalMean) -> i128 {
    let (n, p, q) = (n as i128, c.p as i128, c.q as i128);
    32 * n.pow(5) * q * q + 80 * p * q * n.pow(3) + 60 * p * p * n
}

/// `C^(2)_ij·q/π²` (exact).
fn scaled_c2(i: usize, j: usize, c: RationalMean) -> i128 {
    if i == j {
        60 * c.p as i128
    } else {
        -80 * (i * j) as i128 * c.q as i128
    }
}

/// Enumerates `k = k_A + k_Z ≠ 0` with `|k_A|_∞ ≤ Kmax`, `k_Z` supported on at
/// most two indices of `Z = [1, window] ∖ A` with `|k_Z| ≤ 2`, and reports
/// those with both `k·λ^(2) = 0` and `(C^(2)k)_A = 0` in exact arithmetic.
pub fn resonance_scan(a: &[usize], c: RationalMean, kmax: i64, window: usize) -> Result<ResonanceCertificate> {
    let a = check_index_set(a)?;
    if c.q <= 0 {
        return Err(Error::validation("mean denominator must be positive"));
    }
    if kmax < 0 {
        return Err(Error::validation("Kmax must be non-negative"));
    }
    let z: Vec<usize> = (1..=window).filter(|j| !a.contains(j)).collect();
    let mut kz_options: Vec<Vec<(usize, i64)>> = vec![Vec::new()];
    for (zi, &j) in z.iter().enumerate() {
        for v in [-2i64, -1, 1, 2] {
            kz_options.push(vec![(j, v)]);
        }
        for &l in &z[zi + 1..] {
            for (v, w) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                kz_options.push(vec![(j, v), (l, w)]);
            }
        }
    }
    let side = (2 * kmax + 1) as u64;
    let total_a = side.pow(a.len() as u32);
    let decode = |mut idx: u64| -> Vec<(usize, i64)> {
        a.iter()
            .map(|&i| {
                let v = (idx % side) as i64 - kmax;
                idx /= side;
                (i, v)
            })
            .collect()
    };
    let results: Vec<(u64, Vec<ResonanceVector>)> = (0..total_a)
        .into_par_iter()
        .map(|idx| {
            let k_a = decode(idx);
            let a_zero = k_a.iter().all(|(_, v)| *v == 0);
            let mut count = 0u64;
            let mut bad = Vec::new();
            for kz in &kz_options {
                if kz.is_empty() && a_zero {
                    continue;
                }
                count += 1;
                let rv = ResonanceVector { k_a: k_a.clone(), k_z: kz.clone() };
                let dot: i128 = rv.entries().map(|&(n, v)| v as i128 * scaled_lambda2(n, c)).sum();
                if dot != 0 {
                    continue;
                }
                let ck_zero = a.iter().all(|&i| {
                    rv.entries().map(|&(j, v)| scaled_c2(i, j, c) * v as i128).sum::<i128>() == 0
                });
                if ck_zero {
                    bad.push(rv);
                }
            }
            (count, bad)
        })
        .collect();
    let candidates = results.iter().map(|r| r.0).sum();
    let offenders = results.into_iter().flat_map(|r| r.1).collect();
    Ok(ResonanceCertificate { a, c: c.value(), kmax, window, candidates, offenders })
}

/// Outcome of the exhaustive check of the quintic sum identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombReport {
    pub range: i64,
    pub triples_checked: u64,
    pub quadruples_checked: u64,
    /// Quadruples with `ξ_{klm} = 0` (must be none).
    pub xi_zero: u64,
}

/// Verifies, for all nonzero integers with `|·| ≤ R` summing to zero,
/// `k⁵ + l⁵ + m⁵ = (5/2)klm(k² + l² + m²)` and
/// `k⁵ + l⁵ + m⁵ + n⁵ = 5(k + l)(k + m)(k + n)ξ_{klm}`,
/// `ξ_{klm} = k² + l² + m² + kl + km + lm`; any violation is an error.
pub fn comb_identities_check(range: i64) -> Result<CombReport> {
    if !(1..=50).contains(&range) {
        return Err(Error::validation("range R must lie in 1..=50"));
    }
    let r = range;
    let p5 = |x: i64| (x as i128).pow(5);
    let mut triples = 0u64;
    for k in -r..=r {
        for l in -r..=r {
            let m = -k - l;
            if k == 0 || l == 0 || m == 0 || m.abs() > r {
                continue;
            }
            triples += 1;
            let lhs = 2 * (p5(k) + p5(l) + p5(m));
            let (k, l, m) = (k as i128, l as i128, m as i128);
            let rhs = 5 * k * l * m * (k * k + l * l + m * m);
            if lhs != rhs {
                return Err(Error::numerical(format!("cubic-sum identity violated at ({k}, {l}, {m})")));
            }
        }
    }
    let (quads, xi_zero) = (-r..=r)
        .into_par_iter()
        .map(|k| {
            let mut q = 0u64;
            let mut xz = 0u64;
            for l in -r..=r {
                for m in -r..=r {
                    let n = -k - l - m;
                    if k == 0 || l == 0 || m == 0 || n == 0 || n.abs() > r {
                        continue;
                    }
                    q += 1;
                    let lhs = p5(k) + p5(l) + p5(m) + p5(n);
                    let (k, l, m, n) = (k as i128, l as i128, m as i128, n as i128);
                    let xi = k * k + l * l + m * m + k * l + k * m + l * m;
                    if xi == 0 {
                        xz += 1;
                    }
                    let rhs = 5 * (k + l) * (k + m) * (k + n) * xi;
                    if lhs != rhs {
                        return Err(Error::numerical(format!(
                            "quartic-sum identity violated at ({k}, {l}, {m}, {n})"
                        )));
                    }
                }
            }
            Ok((q, xz))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if xi_zero > 0 {
        return Err(Error::numerical("ξ vanished for a nonzero quadruple"));
    }
    Ok(CombReport { range, triples_checked: triples, quadruples_checked: quads, xi_zero })
}
