//! Rate functions `I(x) = sup_{theta <= theta_c} { theta x - Gamma(theta) }`.
//!
//! `Gamma'` increases from 0 (as `theta -> -inf`) to `+inf` (as `theta`
//! approaches the right end of the domain), so every `x > 0` has an interior
//! maximiser `theta_x` with `Gamma'(theta_x) = x`, found here by bisection.
//! Conventions outside the positive half line: `I(x) = +inf` for `x < 0`
//! and `I(0) = nu`, the limit of `-Gamma(theta)` as `theta -> -inf`.

use crate::cgf::{LimitCgf, Which};
use crate::error::{Error, Result};
use crate::process::ProcessParams;

const MAX_EXPANSIONS: usize = 200;
const MAX_BISECTIONS: usize = 200;
/// Gap kept below the critical point when it bounds the bisection.
const CRITICAL_GAP: f64 = 1e-12;

/// One evaluation of a rate function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub x: f64,
    /// `+inf` outside the effective domain.
    pub rate: f64,
    /// The maximising `theta`, when the supremum is attained at a finite point.
    pub argmax_theta: Option<f64>,
    pub which: Which,
}

/// Rate function evaluator sharing one critical-point solve across calls.
#[derive(Debug, Clone)]
pub struct RateFunction {
    cgf: LimitCgf,
}

impl RateFunction {
    pub fn new(p: &ProcessParams, which: Which) -> Result<Self> {
        Ok(Self {
            cgf: LimitCgf::new(p, which)?,
        })
    }

    pub fn cgf(&self) -> &LimitCgf {
        &self.cgf
    }

    pub fn eval(&self, x: f64) -> Result<RatePoint> {
        self.eval_with_hint(x, None)
    }

    /// Evaluates `I(x)`, using `hint` (a nearby maximiser) to seed the bracket.
    pub fn eval_with_hint(&self, x: f64, hint: Option<f64>) -> Result<RatePoint> {
        let which = self.cgf.which();
        let point = |rate, argmax_theta| RatePoint {
            x,
            rate,
            argmax_theta,
            which,
        };
        if x.is_nan() {
            return Err(Error::InvalidParameter {
                name: "x",
                reason: "NaN".into(),
            });
        }
        if x < 0.0 {
            return Ok(point(f64::INFINITY, None));
        }
        if x == 0.0 {
            return Ok(point(self.cgf.params().nu(), None));
        }
        if x.is_infinite() {
            return Ok(point(f64::INFINITY, None));
        }
        let (lo, hi, interior) = self.bracket(x, hint)?;
        let theta = if interior { self.bisect(x, lo, hi)? } else { hi };
        let gamma = self.cgf.gamma(theta)?;
        Ok(point((theta * x - gamma).max(0.0), Some(theta)))
    }

    fn slope_below(&self, theta: f64, x: f64) -> Result<bool> {
        Ok(self.cgf.gamma_prime(theta)? < x)
    }

    /// Returns `(lo, hi, interior)` with `Gamma'(lo) < x <= Gamma'(hi)` when
    /// `interior`; otherwise `x` lies beyond the slopes reachable below the
    /// critical point and `hi` is the boundary maximiser.
    fn bracket(&self, x: f64, hint: Option<f64>) -> Result<(f64, f64, bool)> {
        let theta_max = self.cgf.theta_max();
        let mut lo = None;
        let mut hi = None;
        if let Some(h) = hint.filter(|h| h.is_finite() && *h < theta_max) {
            if self.slope_below(h, x)? {
                lo = Some(h);
            } else {
                hi = Some(h);
            }
        }
        if hi.is_none() {
            if theta_max.is_finite() {
                let top = theta_max - CRITICAL_GAP * theta_max.abs().max(1.0);
                if self.slope_below(top, x)? {
                    // Gamma' never reaches x: the supremum sits on the boundary.
                    // The count case is closed at theta_c; the unexcited mark
                    // sum has an open domain, so stay just inside it.
                    let boundary = if self.cgf.gamma(theta_max).is_ok() {
                        theta_max
                    } else {
                        top
                    };
                    return Ok((top, boundary, false));
                }
                hi = Some(top);
            } else {
                let mut t = lo.map_or(1.0, |l: f64| l.abs().max(1.0) + l);
                let mut step = 1.0;
                for _ in 0..MAX_EXPANSIONS {
                    if !self.slope_below(t, x)? {
                        hi = Some(t);
                        break;
                    }
                    lo = Some(t);
                    t += step;
                    step *= 2.0;
                }
            }
        }
        let hi = hi.ok_or_else(|| Error::NoBracket {
            what: format!("rate function upper bracket at x = {x}"),
        })?;
        if lo.is_none() {
            let mut step = 1.0;
            let mut t = hi.min(0.0) - step;
            for _ in 0..MAX_EXPANSIONS {
                if self.slope_below(t, x)? {
                    lo = Some(t);
                    break;
                }
                step *= 2.0;
                t -= step;
            }
        }
        let lo = lo.ok_or_else(|| Error::NoBracket {
            what: format!("rate function lower bracket at x = {x}"),
        })?;
        Ok((lo, hi, true))
    }

    fn bisect(&self, x: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope_below(mid, x)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // pick the endpoint whose slope is closer to x
        let dl = (self.cgf.gamma_prime(lo)? - x).abs();
        let dh = (self.cgf.gamma_prime(hi)? - x).abs();
        Ok(if dl <= dh { lo } else { hi })
    }

    /// Evaluates a grid. Points are visited in increasing order so each
    /// maximiser seeds the next bracket; output keeps the input order.
    pub fn curve(&self, grid: &[f64]) -> Result<Vec<RatePoint>> {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
        let mut out: Vec<Option<RatePoint>> = vec![None; grid.len()];
        let mut hint = None;
        for i in order {
            let pt = self.eval_with_hint(grid[i], hint)?;
            if pt.argmax_theta.is_some() {
                hint = pt.argmax_theta;
            }
            out[i] = Some(pt);
        }
        Ok(out.into_iter().map(|p| p.expect("every index visited")).collect())
    }
}

/// `I(x)` for `N_t / t`.
pub fn rate_n(p: &ProcessParams, x: f64) -> Result<RatePoint> {
    RateFunction::new(p, Which::Count)?.eval(x)
}

/// `I_L(x)` for `L_t / t`.
pub fn rate_l(p: &ProcessParams, x: f64) -> Result<RatePoint> {
    RateFunction::new(p, Which::MarkSum)?.eval(x)
}

pub fn rate_curve(p: &ProcessParams, which: Which, grid: &[f64]) -> Result<Vec<RatePoint>> {
    RateFunction::new(p, which)?.curve(grid)
}
