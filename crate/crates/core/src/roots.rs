//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Root of `phi` on a bracket `[lo, hi]` with `phi(lo) <= 0 <= phi(hi)`.
///
/// Illinois-modified regula falsi; falls back to bisection whenever the
/// secant point is not finite or the bracket fails to shrink by half over two
/// steps. The bracket is maintained, so the result is always inside it.
pub fn bracketed<F: Fn(f64) -> f64>(
    phi: F,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    mut fhi: f64,
    xtol: f64,
    max_iter: usize,
) -> f64 {
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    let mut side = 0i8;
    let mut width = hi - lo;
    for it in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
        let secant = if flo.is_finite() && fhi.is_finite() && fhi != flo {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            f64::NAN
        };
        let bisect = it % 3 == 2 && (hi - lo) > 0.5 * width;
        let x = if secant.is_finite() && secant > lo && secant < hi && !bisect {
            secant
        } else {
            0.5 * (lo + hi)
        };
        if it % 3 == 2 {
            width = hi - lo;
        }
        if x <= lo || x >= hi {
            break;
        }
        let fx = phi(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 && fhi.is_finite() {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 && flo.is_finite() {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    if flo.abs() <= fhi.abs() {
        lo
    } else {
        hi
    }
}

/// Solve `f(w) = y` for an increasing `f` on `[0, inf)` with `f(0) = 0`.
///
/// The search runs in `x = ln w` on `ln f(e^x) - ln y`, which is close to
/// linear for power-like growth, so convergence to full precision takes only
/// a handful of evaluations.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, y: f64) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("cannot invert at y = {y}")));
    }
    let ly = y.ln();
    let phi = |x: f64| {
        let v = f(x.exp());
        if v > 0.0 {
            v.ln() - ly
        } else if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        }
    };
    let mut lo = 0.0;
    let mut flo = phi(lo);
    let mut hi;
    let mut fhi;
    if flo < 0.0 {
        let mut step = 1.0;
        hi = lo + step;
        fhi = phi(hi);
        while fhi < 0.0 {
            lo = hi;
            flo = fhi;
            step *= 2.0;
            hi = lo + step;
            if hi > 710.0 {
                return Err(Error::InvalidInput(format!(
                    "inverse of {y:e} exceeds the floating point range"
                )));
            }
            fhi = phi(hi);
        }
    } else {
        hi = lo;
        fhi = flo;
        let mut step = 1.0;
        lo = hi - step;
        flo = phi(lo);
        while !(flo < 0.0) {
            hi = lo;
            fhi = flo;
            step *= 2.0;
            lo = hi - step;
            if lo < -745.0 {
                return Err(Error::InvalidInput(format!(
                    "inverse of {y:e} is below the floating point range"
                )));
            }
            flo = phi(lo);
        }
    }
    let x = bracketed(phi, lo, hi, flo, fhi, 0.0, 200);
    Ok(x.exp())
}
