//! Real 1-periodic trigonometric-polynomial potentials.
//!
//! A potential is stored through its mean `c = u_0` and the coefficients
//! `u_n`, `n ≥ 1`, of `q(x) = Σ_n u_n e^{i2nπx}`; negative modes are implied by
//! the reality condition `u_{-n} = conj(u_n)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real trigonometric polynomial `q(x) = c + Σ_{n≠0} u_n e^{i2nπx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialJson", into = "PotentialJson")]
pub struct Potential {
    mean: f64,
    coeffs: BTreeMap<u32, Complex64>,
}

/// Wire format: `{"mean": f, "modes": [{"n": i, "re": f, "im": f}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialJson {
    pub mean: f64,
    #[serde(default)]
    pub modes: Vec<ModeJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeJson {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

impl TryFrom<PotentialJson> for Potential {
    type Error = Error;

    fn try_from(value: PotentialJson) -> Result<Self> {
        let pairs: Vec<(i64, Complex64)> = value
            .modes
            .iter()
            .map(|m| (m.n, Complex64::new(m.re, m.im)))
            .collect();
        Potential::new(&pairs, value.mean)
    }
}

impl From<Potential> for PotentialJson {
    fn from(p: Potential) -> Self {
        PotentialJson {
            mean: p.mean,
            modes: p
                .coeffs
                .iter()
                .map(|(&n, u)| ModeJson { n: n as i64, re: u.re, im: u.im })
                .collect(),
        }
    }
}

impl Default for Potential {
    fn default() -> Self {
        Potential::zero()
    }
}

impl Potential {
    /// Builds a potential from `(mode, coefficient)` pairs and the mean.
    ///
    /// A pair with negative mode `-n` is read as the conjugate coefficient of
    /// mode `n`; specifying both `n` and `-n`, repeating a mode, passing mode 0
    /// or a non-finite value is rejected.
    pub fn new(pairs: &[(i64, Complex64)], mean: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::validation("potential mean is not finite"));
        }
        let mut coeffs = BTreeMap::new();
        for &(n, u) in pairs {
            if n == 0 {
                return Err(Error::validation(
                    "mode 0 must be given through the mean, not as a coefficient",
                ));
            }
            if !(u.re.is_finite() && u.im.is_finite()) {
                return Err(Error::validation(format!("coefficient of mode {n} is not finite")));
            }
            let m = u32::try_from(n.unsigned_abs())
                .map_err(|_| Error::validation(format!("mode {n} is out of range")))?;
            let u = if n < 0 { u.conj() } else { u };
            if coeffs.insert(m, u).is_some() {
                return Err(Error::validation(format!("duplicate mode {n}")));
            }
        }
        coeffs.retain(|_, u| *u != Complex64::new(0.0, 0.0));
        Ok(Potential { mean, coeffs })
    }

    /// The zero potential.
    pub fn zero() -> Self {
        Potential { mean: 0.0, coeffs: BTreeMap::new() }
    }

    /// The constant potential `q = c`.
    pub fn constant(c: f64) -> Self {
        Potential { mean: c, coeffs: BTreeMap::new() }
    }

    /// `q(x) = Σ_j a_j·2cos(2π n_j x)` for real amplitudes, i.e. `u_{n_j} = a_j`.
    pub fn cosines(terms: &[(u32, f64)]) -> Result<Self> {
        let pairs: Vec<(i64, Complex64)> =
            terms.iter().map(|&(n, a)| (n as i64, Complex64::new(a, 0.0))).collect();
        Potential::new(&pairs, 0.0)
    }

    /// Mean value `c = u_0`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Coefficient `u_n` for any integer `n` (0 returns the mean).
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n == 0 {
            return Complex64::new(self.mean, 0.0);
        }
        let u = self.coeffs.get(&(n.unsigned_abs() as u32)).copied().unwrap_or_default();
        if n < 0 {
            u.conj()
        } else {
            u
        }
    }

    /// Nonzero coefficients `(n, u_n)` for `n ≥ 1`, ascending.
    pub fn modes(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &u)| (n, u))
    }

    /// Highest nonzero mode (0 for constants).
    pub fn max_mode(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    /// True when all non-constant coefficients vanish.
    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same potential with mean zero.
    pub fn zero_mean(&self) -> Self {
        Potential { mean: 0.0, coeffs: self.coeffs.clone() }
    }

    /// Same oscillating part with the given mean.
    pub fn with_mean(&self, mean: f64) -> Self {
        Potential { mean, coeffs: self.coeffs.clone() }
    }

    /// Multiplies every coefficient (including the mean) by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Potential {
            mean: self.mean * s,
            coeffs: self.coeffs.iter().map(|(&n, &u)| (n, u * s)).collect(),
        }
    }

    /// `Σ_{n≠0} |u_n|`, an upper bound for `‖q − c‖_∞`.
    pub fn l1_oscillation(&self) -> f64 {
        2.0 * self.coeffs.values().map(|u| u.norm()).sum::<f64>()
    }

    /// `Σ_n |u_n|` including the mean.
    pub fn l1_norm(&self) -> f64 {
        self.mean.abs() + self.l1_oscillation()
    }

    /// Full complex Fourier sum `Σ u_n e^{i2nπx}` over `±n`.
    pub fn evaluate_complex(&self, x: f64) -> Complex64 {
        let mut s = Complex64::new(self.mean, 0.0);
        for (&n, &u) in &self.coeffs {
            let e = Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x);
            s += u * e + u.conj() * e.conj();
        }
        s
    }

    /// `q(x)`; the imaginary rounding residue of the Fourier sum is discarded.
    pub fn evaluate(&self, x: f64) -> f64 {
        let v = self.evaluate_complex(x);
        debug_assert!(v.im.abs() <= 1e-12 * self.l1_norm().max(f64::MIN_POSITIVE));
        v.re
    }

    /// `q'(x)` and `q''(x)` alongside `q(x)`, exact in Fourier space.
    pub fn evaluate_derivatives(&self, x: f64) -> [f64; 3] {
        let mut out = [self.mean, 0.0, 0.0];
        for (&n, &u) in &self.coeffs {
            let k = 2.0 * PI * n as f64;
            let w = u * Complex64::from_polar(1.0, k * x);
            // 2 Re(u e^{ikx}), derivative 2 Re(ik u e^{ikx}), 2 Re(-k² u e^{ikx})
            out[0] += 2.0 * w.re;
            out[1] += -2.0 * k * w.im;
            out[2] += -2.0 * k * k * w.re;
        }
        out
    }

    /// Minimum of `q` over a uniform grid of `samples` points.
    pub fn grid_min(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|j| self.evaluate(j as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Dense evaluator for repeated evaluation in inner loops.
    pub fn evaluator(&self) -> PotentialEvaluator {
        let k = self.max_mode() as usize;
        let mut dense = vec![Complex64::default(); k];
        for (&n, &u) in &self.coeffs {
            dense[n as usize - 1] = u;
        }
        PotentialEvaluator { mean: self.mean, dense }
    }

    /// Builds a potential from Fourier coefficients `u_n`, `n = 1..`, dropping
    /// entries with `|u_n| ≤ threshold`.
    pub fn from_positive_modes(mean: f64, u: &[Complex64], threshold: f64) -> Result<Self> {
        let pairs: Vec<(i64, Complex64)> = u
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > threshold)
            .map(|(j, &v)| (j as i64 + 1, v))
            .collect();
        Potential::new(&pairs, mean)
    }
}

/// Horner-form evaluator of `q` used by the ODE right-hand sides.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    mean: f64,
    dense: Vec<Complex64>,
}

impl PotentialEvaluator {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.dense.is_empty() {
            return self.mean;
        }
        let w = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut acc = Complex64::default();
        for u in self.dense.iter().rev() {
            acc = (acc + u) * w;
        }
        self.mean + 2.0 * acc.re
    }
}
