//! Weighted sequence spaces, discrete Hilbert-type operators, certified
//! infinite products, the sine product and a Schur-complement invertibility
//! test on finite sections.
//!
//! Weights are `⟨n⟩ = 1 + |n|`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// `⟨n⟩ = 1 + |n|`.
pub fn bracket(n: i64) -> f64 {
    1.0 + n.unsigned_abs() as f64
}

/// Finite complex sequence with entries at consecutive indices starting at
/// `first` (use `first = 1` for sequences over ℕ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedSeq {
    pub first: i64,
    pub entries: Vec<Complex64>,
}

impl WeightedSeq {
    /// Sequence over ℕ: `entries[j]` is the value at `n = j + 1`.
    pub fn from_natural(entries: Vec<Complex64>) -> Self {
        WeightedSeq { first: 1, entries }
    }

    pub fn from_real(values: &[f64]) -> Self {
        WeightedSeq::from_natural(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Unit vector `e_m` over ℕ with length `len`.
    pub fn unit(m: usize, len: usize) -> Self {
        let mut e = vec![Complex64::default(); len];
        e[m - 1] = Complex64::new(1.0, 0.0);
        WeightedSeq::from_natural(e)
    }

    pub fn get(&self, n: i64) -> Complex64 {
        let j = n - self.first;
        if j < 0 || j as usize >= self.entries.len() {
            Complex64::default()
        } else {
            self.entries[j as usize]
        }
    }

    fn indexed(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.entries.iter().enumerate().map(move |(j, &v)| (self.first + j as i64, v))
    }

    /// `‖z‖_{s,p} = (Σ⟨n⟩^{sp}|z_n|^p)^{1/p}`; `p = ∞` gives `max ⟨n⟩^s|z_n|`.
    pub fn norm(&self, s: f64, p: f64) -> f64 {
        if p.is_infinite() {
            return self
                .indexed()
                .map(|(n, v)| bracket(n).powf(s) * v.norm())
                .fold(0.0, f64::max);
        }
        self.indexed()
            .map(|(n, v)| (bracket(n).powf(s) * v.norm()).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn natural_input(x: &WeightedSeq) -> Result<Vec<(i64, Complex64)>> {
    if x.first < 1 {
        return Err(Error::validation("operator input must be indexed over n ≥ 1"));
    }
    Ok(x.indexed().filter(|(_, v)| *v != Complex64::default()).collect())
}

/// `(Ax)_n = Σ_{m≠n} x_m/(m² − n²)` for `1 ≤ n ≤ out_len`.
pub fn op_a(x: &WeightedSeq, out_len: usize) -> Result<WeightedSeq> {
    let support = natural_input(x)?;
    let out = (1..=out_len as i64)
        .map(|n| {
            support
                .iter()
                .filter(|(m, _)| *m != n)
                .map(|&(m, v)| v / ((m * m - n * n) as f64))
                .sum()
        })
        .collect();
    Ok(WeightedSeq::from_natural(out))
}

/// `(Gx)_n = Σ_{m≠n} x_m/|m − n|²` for `1 ≤ n ≤ out_len`.
pub fn op_g(x: &WeightedSeq, out_len: usize) -> Result<WeightedSeq> {
    let support = natural_input(x)?;
    let out = (1..=out_len as i64)
        .map(|n| {
            support
                .iter()
                .filter(|(m, _)| *m != n)
                .map(|&(m, v)| v / (((m - n) * (m - n)) as f64))
                .sum()
        })
        .collect();
    Ok(WeightedSeq::from_natural(out))
}

/// `Π(1 + a_m)` and, when requested, the certified bound
/// `|Π(1 + a_m) − 1| ≤ A e^S + B e^{S + S²}` with `A = |Σa_m|`,
/// `B = Σ|a_m|²`, `S = Σ|a_m|` (requires `|a_m| ≤ 1/2`).
pub fn inf_product(a: &[Complex64], with_bound: bool) -> Result<(Complex64, Option<f64>)> {
    let prod = a.iter().fold(Complex64::new(1.0, 0.0), |acc, v| acc * (1.0 + v));
    if !with_bound {
        return Ok((prod, None));
    }
    if let Some(bad) = a.iter().find(|v| v.norm() > 0.5) {
        return Err(Error::validation(format!(
            "factor with |a_m| = {} > 1/2 is outside the certified regime",
            bad.norm()
        )));
    }
    let big_a = a.iter().sum::<Complex64>().norm();
    let big_b: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let s: f64 = a.iter().map(|v| v.norm()).sum();
    Ok((prod, Some(big_a * s.exp() + big_b * (s + s * s).exp())))
}

/// `Π_{m≤M}(m²π² − λ)/(m²π²)`, optionally multiplied by the asymptotic tail
/// `exp(−(λ/π²)Σ_{m>M}m⁻² − (λ²/2π⁴)Σ_{m>M}m⁻⁴)`; converges to `sin√λ/√λ`.
pub fn sin_product(lambda: Complex64, m_trunc: usize, tail_correction: bool) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    for m in 1..=m_trunc {
        let m2 = (m * m) as f64 * PI * PI;
        p *= (m2 - lambda) / m2;
    }
    if tail_correction {
        let mf = m_trunc as f64;
        // Euler–Maclaurin tails of Σ_{m>M} m⁻² and m⁻⁴
        let z2 = 1.0 / mf - 1.0 / (2.0 * mf * mf) + 1.0 / (6.0 * mf.powi(3));
        let z4 = 1.0 / (3.0 * mf.powi(3)) - 1.0 / (2.0 * mf.powi(4));
        let pi2 = PI * PI;
        p *= (-(lambda / pi2) * z2 - lambda * lambda / (2.0 * pi2 * pi2) * z4).exp();
    }
    p
}

/// Verdict of the finite-section Schur-complement test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurVerdict {
    pub invertible: bool,
    pub tail_norm: f64,
    pub schur_det: Option<f64>,
    pub reason: String,
}

/// Decides invertibility of `Id + T` with `T = [[A, B], [C, D]]` split after
/// the first `split` coordinates: requires `‖D‖ < 1` and
/// `det(Id + A − B(Id + D)⁻¹C) ≠ 0` (beyond `1e-12`).
pub fn schur_invertible(t: &DMatrix<f64>, split: usize) -> Result<SchurVerdict> {
    let n = t.nrows();
    if t.ncols() != n || split > n {
        return Err(Error::validation("Schur test needs a square matrix and split ≤ size"));
    }
    let tail = n - split;
    let d = t.view((split, split), (tail, tail)).into_owned();
    let tail_norm = if tail == 0 { 0.0 } else { d.clone().svd(false, false).singular_values.max() };
    if tail_norm >= 1.0 {
        return Ok(SchurVerdict {
            invertible: false,
            tail_norm,
            schur_det: None,
            reason: "tail norm ≥ 1".into(),
        });
    }
    let a = t.view((0, 0), (split, split)).into_owned();
    let b = t.view((0, split), (split, tail)).into_owned();
    let c = t.view((split, 0), (tail, split)).into_owned();
    let id_d = DMatrix::<f64>::identity(tail, tail) + d;
    let inv = id_d
        .try_inverse()
        .ok_or_else(|| Error::numerical("Id + D is singular despite ‖D‖ < 1"))?;
    let s = DMatrix::<f64>::identity(split, split) + a - b * inv * c;
    let det = if split == 0 { 1.0 } else { s.determinant() };
    let ok = det.abs() > 1e-12;
    Ok(SchurVerdict {
        invertible: ok,
        tail_norm,
        schur_det: Some(det),
        reason: if ok { "ok".into() } else { "Schur complement is singular".into() },
    })
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> WeightedSeq {
    WeightedSeq::from_natural(
        (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
    )
}

/// Largest `‖Gx‖_p/‖x‖_p` over random vectors of length `len` (output on
/// the same section).
pub fn op_g_ratio_study(p: f64, samples: usize, len: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_vector(&mut rng, len);
        let gx = op_g(&x, len)?;
        worst = worst.max(gx.norm(0.0, p) / x.norm(0.0, p));
    }
    Ok(worst)
}

/// Largest `‖Ax‖_{s+1,p}/‖x‖_{s,p}` over random vectors of length `len`.
pub fn op_a_ratio_study(s: f64, p: f64, samples: usize, len: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_vector(&mut rng, len);
        let ax = op_a(&x, len)?;
        worst = worst.max(ax.norm(s + 1.0, p) / x.norm(s, p));
    }
    Ok(worst)
}

/// Random admissible factor lists (`|a_m| ≤ 1/2`, `Σ|a_m| ≤ s_max`) checked
/// against the certified bound; returns `(violations, smallest slack)` where
/// slack is `bound − |Π(1 + a) − 1|`.
pub fn inf_product_study(samples: usize, s_max: f64, seed: u64) -> Result<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for _ in 0..samples {
        let len = rng.gen_range(1..=24);
        let mut a: Vec<Complex64> =
            (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let total: f64 = a.iter().map(|v| v.norm()).sum();
        let target = rng.gen_range(0.0..s_max);
        a.iter_mut().for_each(|v| *v *= target / total);
        let (prod, bound) = inf_product(&a, true)?;
        let bound = bound.expect("bound requested");
        let dev = (prod - 1.0).norm();
        if dev > bound {
            violations += 1;
        }
        slack = slack.min(bound - dev);
    }
    Ok((violations, slack))
}

/// Results of the randomized sequence-space suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSuite {
    pub seed: u64,
    pub samples: usize,
    /// `(p, max ‖Gx‖_p/‖x‖_p)` for `p ∈ {1, 2, ∞}`.
    pub op_g_ratio: Vec<(f64, f64)>,
    /// `(s, p, max ratio at length 64, max ratio at length 128)`.
    pub op_a_ratio: Vec<(f64, f64, f64, f64)>,
    pub inf_product_violations: usize,
    pub inf_product_min_slack: f64,
    /// `|sin-product(π²/4, 10⁴) − 2/π|/(2/π)` with tail correction.
    pub sin_product_error: f64,
}

/// Runs the operator-norm, product-bound and sine-product studies.
pub fn sequence_suite(seed: u64, samples: usize) -> Result<SequenceSuite> {
    let op_g_ratio = [1.0, 2.0, f64::INFINITY]
        .iter()
        .map(|&p| Ok((p, op_g_ratio_study(p, samples, 64, seed)?)))
        .collect::<Result<_>>()?;
    let op_a_ratio = [(-1.0, 2.0), (0.0, 2.0)]
        .iter()
        .map(|&(s, p)| {
            Ok((s, p, op_a_ratio_study(s, p, samples, 64, seed)?, op_a_ratio_study(s, p, samples, 128, seed)?))
        })
        .collect::<Result<_>>()?;
    let (violations, slack) = inf_product_study(samples, 0.3, seed)?;
    let target = 2.0 / PI;
    let sp = sin_product(Complex64::new(PI * PI / 4.0, 0.0), 10_000, true);
    Ok(SequenceSuite {
        seed,
        samples,
        op_g_ratio,
        op_a_ratio,
        inf_product_violations: violations,
        inf_product_min_slack: slack,
        sin_product_error: (sp - target).norm() / target,
    })
}
