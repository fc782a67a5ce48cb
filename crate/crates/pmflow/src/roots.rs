//! Bracketed scalar root finding and unimodal maximization.

use crate::error::{PmError, Result};

/// Bisection on `[lo, hi]` for a sign change of `f`.
///
/// Stops when the bracket is narrower than `tol` or stops shrinking in floating point.
/// Returns the endpoint itself if `f` vanishes there.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(PmError::Bracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Illinois-modified regula falsi on `[lo, hi]`; same contract as [`bisect`].
///
/// A bisection step is forced whenever two steps fail to halve the bracket,
/// so the width shrinks at least as fast as bisection every third step.
pub fn illinois<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(PmError::Bracket { lo, hi, f_lo, f_hi });
    }
    let mut side = 0i8;
    let mut width = (hi - lo).abs();
    let mut stalled = 0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        let secant = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let inside = secant > lo.min(hi) && secant < lo.max(hi);
        let x = if stalled >= 2 || !inside { mid } else { secant };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        let w = (hi - lo).abs();
        if w <= 0.5 * width {
            width = w;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 2 {
                width = w;
                stalled = 0;
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisection for the boundary of a predicate that holds at `lo` and fails at `hi`.
/// Returns the last point known to satisfy it.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut p: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if p(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Expands `hi` geometrically away from `lo` until `f` changes sign, at most 60 doublings.
pub fn widen_upper<F: FnMut(f64) -> f64>(mut f: F, lo: f64, mut hi: f64) -> Result<f64> {
    let f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut doublings = 0;
    while f_lo.signum() == f_hi.signum() {
        if doublings == 60 || !f_hi.is_finite() {
            return Err(PmError::Bracket { lo, hi, f_lo, f_hi });
        }
        hi = lo + 2.0 * (hi - lo);
        f_hi = f(hi);
        doublings += 1;
    }
    Ok(hi)
}

/// Golden-section search for the maximizer of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
