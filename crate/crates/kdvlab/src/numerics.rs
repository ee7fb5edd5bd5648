//! Small numerical kernels: bracketed root finding, Gauss–Chebyshev
//! quadrature, Chebyshev grids and phase unwrapping.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Brent's method for a sign change of `f` on `[a, b]` with known end values.
///
/// Terminates when the bracket is narrower than `xtol` (absolute) or an exact
/// zero is hit.
pub fn brent<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(format!(
            "root not bracketed on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::numerical("Brent iteration did not converge"))
}

/// Gauss–Chebyshev (first kind) nodes `t_j = cos((2j−1)π/(2N))`, `j = 1..N`;
/// `∫_{-1}^{1} g(t)/√(1−t²) dt ≈ (π/N) Σ_j g(t_j)`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (1..=n).map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

/// `√(1−t²)` at the Gauss–Chebyshev nodes, computed as `sin` of the angle to
/// avoid cancellation near the endpoints.
pub fn chebyshev_node_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).sin()).collect()
}

/// `n` Chebyshev–Lobatto points mapped to `[a, b]`, ascending.
pub fn chebyshev_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|j| {
            let c = -(PI * j as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * c
        })
        .collect()
}

/// Unwraps a phase sequence so that consecutive jumps lie in `(−π, π]`.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            let mut d = p - q;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d <= -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Least-squares line `y ≈ a + b x`; returns `(b, a, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(|x| Ok(x.cos()), 1.0, 2.0, 1f64.cos(), 2f64.cos(), 1e-15).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_quadrature_integrates_polynomials() {
        let n = 16;
        let s: f64 = chebyshev_nodes(n).iter().map(|t| t * t).sum::<f64>() * PI / n as f64;
        assert!((s - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn unwrap_restores_linear_phase() {
        let raw: Vec<f64> = (0..100)
            .map(|j| {
                let p = 0.7 * j as f64;
                p.sin().atan2(p.cos())
            })
            .collect();
        let u = unwrap_phases(&raw);
        for (j, v) in u.iter().enumerate() {
            assert!((v - 0.7 * j as f64).abs() < 1e-12);
        }
    }
}
