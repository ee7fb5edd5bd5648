//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Sorted eigenvalues of a dense symmetric matrix.
fn sorted_eigenvalues(h: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Periodic and antiperiodic eigenvalues of `−y″ + qy` for the cosine
/// potential `q = Σ a_k·2cos(2πkx)`, from the Hill matrix in the basis
/// `e^{iπmx}`, `|m| ≤ 2·half + 1`. Returns `(λ_0^+, [(λ_n^−, λ_n^+)])` for
/// `1 ≤ n ≤ n_max`.
pub fn hill_matrix_spectrum(cosines: &[(usize, f64)], n_max: usize, half: i64) -> (f64, Vec<(f64, f64)>) {
    let mut pairs = vec![(0.0, 0.0); n_max];
    let mut ground = 0.0;
    for parity in [0i64, 1] {
        let ms: Vec<i64> = (-half..=half).map(|j| 2 * j + parity).collect();
        let d = ms.len();
        let mut h = DMatrix::<f64>::zeros(d, d);
        for (i, &mi) in ms.iter().enumerate() {
            for (j, &mj) in ms.iter().enumerate() {
                if i == j {
                    h[(i, j)] = (PI * mi as f64).powi(2);
                }
                let k = ((mi - mj) / 2).unsigned_abs() as usize;
                for &(mode, a) in cosines {
                    if k == mode {
                        h[(i, j)] += a;
                    }
                }
            }
        }
        let ev = sorted_eigenvalues(h);
        let start = if parity == 0 {
            ground = ev[0];
            1
        } else {
            0
        };
        for (j, pair) in ev[start..].chunks(2).enumerate() {
            let n = if parity == 0 { 2 * (j + 1) } else { 2 * j + 1 };
            if n <= n_max {
                pairs[n - 1] = (pair[0], pair[1]);
            }
        }
    }
    (ground, pairs)
}

/// Dirichlet eigenvalues `μ_1 < μ_2 < …` on `[0, 1]` for the cosine
/// potential, from the sine-basis Galerkin matrix of size `size`.
pub fn dirichlet_matrix_spectrum(cosines: &[(usize, f64)], size: usize) -> Vec<f64> {
    let mut h = DMatrix::<f64>::zeros(size, size);
    for j in 1..=size {
        for k in 1..=size {
            let mut v = if j == k { (PI * j as f64).powi(2) } else { 0.0 };
            for &(m, a) in cosines {
                if j.abs_diff(k) == 2 * m {
                    v += a;
                }
                if j + k == 2 * m {
                    v -= a;
                }
            }
            h[(j - 1, k - 1)] = v;
        }
    }
    sorted_eigenvalues(h)
}

/// `Δ(λ)` by classical RK4 with `steps` equal steps on the fundamental system.
pub fn rk4_discriminant(q: impl Fn(f64) -> f64, lambda: f64, steps: usize) -> f64 {
    let f = |x: f64, y: [f64; 4]| [y[1], (q(x) - lambda) * y[0], y[3], (q(x) - lambda) * y[2]];
    let mut y = [1.0, 0.0, 0.0, 1.0];
    let h = 1.0 / steps as f64;
    for s in 0..steps {
        let x = s as f64 * h;
        let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(x + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(x + h, add(y, k3, h));
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y[0] + y[3]
}

/// `q(x) = Σ a_k·2cos(2πkx)`.
pub fn cosine_eval(cosines: &[(usize, f64)], x: f64) -> f64 {
    cosines.iter().map(|&(k, a)| 2.0 * a * (2.0 * PI * k as f64 * x).cos()).sum()
}
