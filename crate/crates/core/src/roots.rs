//! Bracketed scalar root finding shared by the calibration routines.

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 200;

/// Finds a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` differ in sign.
///
/// Bisection narrows the bracket to a relative width of 1e-3, then the
/// Illinois variant of regula falsi finishes. Every step keeps the root
/// bracketed, so the iteration cannot wander off a monotone target.
pub(crate) fn find_root<F>(op: &'static str, f: F, mut lo: f64, mut hi: f64, x_rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::domain(op, format!("root not bracketed in [{lo}, {hi}]")));
    }
    // -1: lo was moved last, +1: hi was moved last
    let mut side = 0i8;
    for _ in 0..MAX_ITER {
        let width = hi - lo;
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let mut x = if width > 1e-3 * scale {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= x_rel_tol * lo.abs().max(hi.abs()) || hi - lo <= f64::MIN_POSITIVE {
            // return the endpoint with the smaller residual
            return Ok(if flo.abs() <= fhi.abs() { lo } else { hi });
        }
    }
    Err(Error::NonConvergence {
        op,
        iterations: MAX_ITER,
    })
}
