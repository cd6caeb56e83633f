//! Safeguarded Newton iteration on a sign-changing bracket.

use crate::error::{Error, Result};

/// Root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
///
/// Newton steps are taken when they stay inside the current bracket and
/// shrink it fast enough; otherwise the step falls back to bisection. Stops
/// when the bracket is down to a few ulps or `f` hits zero exactly.
pub(crate) fn newton_bisect<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::RootBracket { lo, hi });
    }

    let mut x = 0.5 * (lo + hi);
    let mut last_width = hi - lo;
    for _ in 0..400 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || width <= f64::MIN_POSITIVE {
            return Ok(0.5 * (lo + hi));
        }

        let slope = df(x);
        let newton = x - fx / slope;
        let use_newton = slope != 0.0 && newton > lo && newton < hi && width < 0.5 * last_width;
        last_width = width;
        x = if use_newton { newton } else { 0.5 * (lo + hi) };
    }
    Ok(0.5 * (lo + hi))
}
