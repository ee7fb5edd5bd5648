//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

/// Step-control settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative local error tolerance.
    pub rtol: f64,
    /// Absolute local error tolerance.
    pub atol: f64,
    /// Initial step (0 selects `(x1 − x0)/64`).
    pub h0: f64,
    /// Hard limit on the number of attempted steps.
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, h0: 0.0, max_steps: 2_000_000 }
    }
}

/// Counters reported by [`integrate`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` with local error control in the
/// max norm `|err_i| ≤ atol + rtol·|y_i|`, returning the state at `x1`.
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: [f64; N],
    opts: OdeOptions,
) -> Result<([f64; N], OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok((y0, OdeStats::default()));
    }
    let dir = span.signum();
    let mut h = if opts.h0 > 0.0 { opts.h0.min(span.abs()) } else { span.abs() / 64.0 };
    let h_min = span.abs() * 1e-14;
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut stats = OdeStats::default();
    let mut attempts = 0usize;
    loop {
        let remaining = (x1 - x) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(Error::numerical(format!(
                "ODE step limit exceeded at x = {x:.6} (h = {h:.3e})"
            )));
        }
        let hs = h * dir;
        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            x + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let x_new = if last { x1 } else { x + hs };
        let k7 = f(x_new, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        if !err.is_finite() {
            return Err(Error::numerical(format!("non-finite ODE state near x = {x:.6}")));
        }
        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            if last {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < h_min {
                return Err(Error::numerical(format!(
                    "ODE step size underflow at x = {x:.6}"
                )));
            }
        }
    }
    Ok((y, stats))
}

/// Dormand–Prince fifth-order solution on `steps` equal steps, without error
/// control.  The result is a smooth function of any parameter in `f`, which
/// adaptive step selection does not guarantee.
pub fn integrate_fixed<const N: usize, F>(mut f: F, x0: f64, x1: f64, y0: [f64; N], steps: usize) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if steps == 0 {
        return Err(Error::validation("fixed-step integration needs at least one step"));
    }
    let h = (x1 - x0) / steps as f64;
    let mut y = y0;
    for j in 0..steps {
        let x = x0 + j as f64 * h;
        let k1 = f(x, &y);
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        y = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite state in fixed-step integration"));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let w = 7.0f64;
        let (y, _) = integrate(
            |_, y: &[f64; 2]| [y[1], -w * w * y[0]],
            0.0,
            1.0,
            [1.0, 0.0],
            OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        assert!((y[0] - w.cos()).abs() < 1e-10);
        assert!((y[1] + w * w.sin()).abs() < 1e-9);
    }

    #[test]
    fn fixed_steps_converge_at_fifth_order() {
        let w = 7.0f64;
        let err = |steps| {
            let y = integrate_fixed(|_, y: &[f64; 2]| [y[1], -w * w * y[0]], 0.0, 1.0, [1.0, 0.0], steps).unwrap();
            (y[0] - w.cos()).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 25.0 && ratio < 40.0, "ratio {ratio}");
    }
}
