//! Bracketed scalar root finding.

use crate::error::Result;

pub(crate) const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Newton's method kept inside a sign-change bracket, falling back to
/// bisection whenever the Newton step leaves the bracket or stalls.
///
/// `f` returns `(value, derivative)`. Requires `f(lo)` and `f(hi)` of
/// opposite sign (zero allowed at either end).
pub(crate) fn safeguarded_newton(
    mut f: impl FnMut(f64) -> Result<(f64, f64)>,
    mut lo: f64,
    mut hi: f64,
) -> Result<Root> {
    let (f_lo, _) = f(lo)?;
    if f_lo == 0.0 {
        return Ok(Root { x: lo, iterations: 0 });
    }
    let (f_hi, _) = f(hi)?;
    if f_hi == 0.0 {
        return Ok(Root { x: hi, iterations: 0 });
    }
    debug_assert!(f_lo.signum() != f_hi.signum());
    // orient so that f(lo) < 0 < f(hi) in the bookkeeping below
    let flip = f_lo > 0.0;
    let g = |v: f64| if flip { -v } else { v };

    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x)?;
    for it in 1..=MAX_STEPS {
        let gx = g(fx);
        let gdx = g(dfx);
        if gx == 0.0 {
            return Ok(Root { x, iterations: it });
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let newton_ok = newton.is_finite()
            && newton > lo.min(hi)
            && newton < lo.max(hi)
            && (2.0 * gx).abs() <= (dx_old * gdx).abs();
        dx_old = dx;
        let next = if newton_ok {
            dx = x - newton;
            newton
        } else {
            dx = 0.5 * (hi - lo);
            lo + dx
        };
        let tol = 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        if dx.abs() <= tol || next == lo || next == hi {
            return Ok(Root {
                x: next,
                iterations: it,
            });
        }
        x = next;
        (fx, dfx) = f(x)?;
    }
    Ok(Root {
        x,
        iterations: MAX_STEPS,
    })
}
