//! Cumulant generating functions of `N_t` and `L_t`.
//!
//! Two layers live here:
//!
//! * exact finite-horizon CGFs `(1/t) log E[exp(theta N_t)]` and
//!   `(1/t) log E[exp(theta L_t)]`, obtained by conditioning one step at a
//!   time and unrolling the excitation sum;
//! * their limits `Gamma(theta) = nu (x* - 1)`, where `x*` is the minimal
//!   root of a scalar fixed-point equation, together with the critical point
//!   `(theta_c, x_c)` beyond which the limit is infinite.
//!
//! With `h = ||alpha||_1` and `M(s) = E[exp(s l)]` the fixed-point maps are
//!
//! ```text
//! count:    x = exp(theta) M(h (x - 1))
//! mark sum: x = M(theta + h (x - 1))
//! ```
//!
//! Both maps are increasing and convex in `x`. For `theta` up to the
//! critical value the gap `map(x) - x` is positive at `x = 0` and
//! non-positive at `x_c`, so `[0, x_c]` brackets exactly one root: the
//! minimal one, which is the limit the finite-horizon recursion converges to.

use crate::error::{Error, Result};
use crate::process::ProcessParams;
use crate::roots::safeguarded_newton;

/// Which additive functional a CGF or rate function describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    /// The event count `N_t`.
    Count,
    /// The mark sum `L_t`.
    MarkSum,
}

/// Thetas within this distance above `theta_c` are treated as `theta_c`.
pub const THETA_C_SLACK: f64 = 1e-12;
/// Below this the implicit-derivative denominator is considered zero.
const SLOPE_DENOM_FLOOR: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Finite horizon
// ---------------------------------------------------------------------------

/// `exp(f_s(theta)) - 1` for `s = 0..t`, where `f_0 = theta` and
/// `f_s = theta + log M(sum_{u=1}^{min(s,K)} (exp(f_{s-u}) - 1) alpha(u))`.
fn count_terms_m1(p: &ProcessParams, theta: f64, t: usize) -> Result<Vec<f64>> {
    let w = p.kernel().weights();
    let marks = p.marks();
    let mut em = Vec::with_capacity(t);
    em.push(theta.exp_m1());
    for s in 1..t {
        let mut arg = 0.0;
        for u in 1..=s.min(w.len()) {
            // zero weights would turn an infinite term into NaN
            if w[u - 1] != 0.0 {
                arg += em[s - u] * w[u - 1];
            }
        }
        let m = marks
            .mgf(arg)
            .map_err(|_| Error::TiltTooLarge { theta, step: s })?;
        em.push((theta + m.ln()).exp_m1());
    }
    Ok(em)
}

/// `g_s(theta) - 1` for `s = 0..t`, where `g_0 = M(theta)` and
/// `g_s = M(theta + sum_{u=1}^{min(s,K)} (g_{s-u} - 1) alpha(u))`.
fn mark_sum_terms_m1(p: &ProcessParams, theta: f64, t: usize) -> Result<Vec<f64>> {
    let w = p.kernel().weights();
    let marks = p.marks();
    let mut gm = Vec::with_capacity(t);
    for s in 0..t {
        let mut arg = theta;
        for u in 1..=s.min(w.len()) {
            if w[u - 1] != 0.0 {
                arg += gm[s - u] * w[u - 1];
            }
        }
        let g = marks
            .mgf(arg)
            .map_err(|_| Error::TiltTooLarge { theta, step: s })?;
        gm.push(g - 1.0);
    }
    Ok(gm)
}

fn check_horizon(t: usize) -> Result<()> {
    if t == 0 {
        Err(Error::InvalidParameter {
            name: "t",
            reason: "horizon must be at least 1".into(),
        })
    } else {
        Ok(())
    }
}

/// The sequence `exp(f_s(theta))`, `s = 0..t`, of the count recursion.
pub fn count_recursion(p: &ProcessParams, theta: f64, t: usize) -> Result<Vec<f64>> {
    check_horizon(t)?;
    Ok(count_terms_m1(p, theta, t)?
        .into_iter()
        .map(|e| e + 1.0)
        .collect())
}

/// The sequence `g_s(theta)`, `s = 0..t`, of the mark-sum recursion.
pub fn mark_sum_recursion(p: &ProcessParams, theta: f64, t: usize) -> Result<Vec<f64>> {
    check_horizon(t)?;
    Ok(mark_sum_terms_m1(p, theta, t)?
        .into_iter()
        .map(|e| e + 1.0)
        .collect())
}

/// `(1/t) log E[exp(theta N_t)] = (nu/t) sum_{s<t} (exp(f_s(theta)) - 1)`.
pub fn finite_time_cgf_n(p: &ProcessParams, theta: f64, t: usize) -> Result<f64> {
    check_horizon(t)?;
    let terms = count_terms_m1(p, theta, t)?;
    Ok(p.nu() * terms.iter().sum::<f64>() / t as f64)
}

/// `(1/t) log E[exp(theta L_t)] = (nu/t) sum_{s<t} (g_s(theta) - 1)`.
pub fn finite_time_cgf_l(p: &ProcessParams, theta: f64, t: usize) -> Result<f64> {
    check_horizon(t)?;
    let terms = mark_sum_terms_m1(p, theta, t)?;
    Ok(p.nu() * terms.iter().sum::<f64>() / t as f64)
}

pub fn finite_time_cgf(p: &ProcessParams, which: Which, theta: f64, t: usize) -> Result<f64> {
    match which {
        Which::Count => finite_time_cgf_n(p, theta, t),
        Which::MarkSum => finite_time_cgf_l(p, theta, t),
    }
}

/// Exact `(E[S_t] / t, Var(S_t) / t)` for `S = N` or `L`, from the first two
/// theta-derivatives of the finite-horizon recursion at `theta = 0`.
pub fn finite_time_moments(p: &ProcessParams, which: Which, t: usize) -> Result<(f64, f64)> {
    check_horizon(t)?;
    let w = p.kernel().weights();
    let m1 = p.marks().moment(1)?;
    let m2 = p.marks().moment(2)?;
    // at theta = 0 every f_s and every g_s - 1 vanishes
    let mut d1 = Vec::with_capacity(t);
    let mut d2 = Vec::with_capacity(t);
    let (mut sum1, mut sum2) = (0.0, 0.0);
    for s in 0..t {
        let (mut a1, mut a2) = (0.0, 0.0);
        for u in 1..=s.min(w.len()) {
            let (f1, f2): (f64, f64) = (d1[s - u], d2[s - u]);
            a1 += w[u - 1] * f1;
            a2 += w[u - 1]
                * match which {
                    Which::Count => f1 * f1 + f2,
                    Which::MarkSum => f2,
                };
        }
        let (f1, f2) = match which {
            // f_s' = 1 + m1 a', f_s'' = Var(l) a'^2 + m1 a''
            Which::Count => (1.0 + m1 * a1, (m2 - m1 * m1) * a1 * a1 + m1 * a2),
            // b' = 1 + a', g' = m1 b', g'' = m2 b'^2 + m1 a''
            Which::MarkSum => {
                let b1 = 1.0 + a1;
                (m1 * b1, m2 * b1 * b1 + m1 * a2)
            }
        };
        d1.push(f1);
        d2.push(f2);
        match which {
            Which::Count => {
                sum1 += f1;
                sum2 += f1 * f1 + f2;
            }
            Which::MarkSum => {
                sum1 += f1;
                sum2 += f2;
            }
        }
    }
    let scale = p.nu() / t as f64;
    Ok((scale * sum1, scale * sum2))
}

// ---------------------------------------------------------------------------
// Critical points
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalStatus {
    /// A genuine tangency `G(x_c) = G'(x_c) = 0` was found.
    Tangent,
    /// `h = 0`: no self-excitation, `theta_c = +inf`.
    Degenerate,
    /// The mark MGF domain ended before a tangency; `theta_c` is reported at
    /// the last point examined.
    DomainExhausted,
}

/// Tangency point of the fixed-point equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub theta_c: f64,
    pub x_c: f64,
    pub which: Which,
    pub status: CriticalStatus,
    /// `(|G(x_c)| / max(1, x_c), |G'(x_c)|)` at `theta_c`.
    pub residuals: (f64, f64),
}

impl CriticalPoint {
    fn degenerate(which: Which) -> Self {
        Self {
            theta_c: f64::INFINITY,
            x_c: f64::INFINITY,
            which,
            status: CriticalStatus::Degenerate,
            residuals: (0.0, 0.0),
        }
    }
}

fn require_stable(p: &ProcessParams) -> Result<()> {
    let margin = p.stability_margin();
    if margin > 0.0 {
        Ok(())
    } else {
        Err(Error::Stability { margin })
    }
}

/// Finds a point right of `start` where `f > 0`, staying inside the MGF
/// domain whose edge (in the same coordinate) is `edge`. Returns the point
/// and whether a sign change was found.
fn expand_bracket(start: f64, edge: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, bool)> {
    let mut last = start;
    if edge.is_finite() {
        for j in 1..=60 {
            let x = start + (edge - start) * (1.0 - 0.5f64.powi(j));
            if x >= edge {
                break;
            }
            last = x;
            if f(x)? > 0.0 {
                return Ok((x, true));
            }
        }
    } else {
        let mut step = 1.0;
        for _ in 0..200 {
            let x = start + step;
            last = x;
            let v = f(x)?;
            if v > 0.0 {
                return Ok((x, true));
            }
            step *= 2.0;
        }
    }
    Ok((last, false))
}

/// Critical point for `N_t`: `x_c > 1` solves
/// `x h M'(h(x-1)) = M(h(x-1))`, and `theta_c = -log(h M'(h(x_c-1)))`.
pub fn critical_point_n(p: &ProcessParams) -> Result<CriticalPoint> {
    require_stable(p)?;
    let h = p.h();
    if h == 0.0 {
        return Ok(CriticalPoint::degenerate(Which::Count));
    }
    let marks = p.marks();
    let phi = |x: f64| -> Result<(f64, f64)> {
        let v = h * (x - 1.0);
        let value = x * h * marks.mgf_d1(v)? - marks.mgf(v)?;
        let slope = x * h * h * marks.mgf_d2(v)?;
        Ok((value, slope))
    };
    let edge = 1.0 + marks.mgf_domain_sup() / h;
    let (hi, found) = expand_bracket(1.0, edge, |x| Ok(phi(x)?.0))?;
    let theta_at = |x: f64| -> Result<f64> { Ok(-(h * marks.mgf_d1(h * (x - 1.0))?).ln()) };
    if !found {
        return Ok(CriticalPoint {
            theta_c: theta_at(hi)?,
            x_c: hi,
            which: Which::Count,
            status: CriticalStatus::DomainExhausted,
            residuals: (f64::NAN, f64::NAN),
        });
    }
    let x_c = safeguarded_newton(phi, 1.0, hi)?.x;
    let theta_c = theta_at(x_c)?;
    let v = h * (x_c - 1.0);
    let e = theta_c.exp();
    let g = e * marks.mgf(v)? - x_c;
    let dg = e * h * marks.mgf_d1(v)? - 1.0;
    Ok(CriticalPoint {
        theta_c,
        x_c,
        which: Which::Count,
        status: CriticalStatus::Tangent,
        residuals: (g.abs() / x_c.max(1.0), dg.abs()),
    })
}

/// Critical point for `L_t`: the tangency of `x = M(theta + h(x-1))`.
///
/// Writing `u = theta + h(x-1)`, tangency means `h M'(u) = 1`, which pins
/// `u*` uniquely since `M'` is increasing; then `x_c = M(u*)` and
/// `theta_c = u* - h(x_c - 1)`.
pub fn critical_point_l(p: &ProcessParams) -> Result<CriticalPoint> {
    require_stable(p)?;
    let h = p.h();
    if h == 0.0 {
        return Ok(CriticalPoint::degenerate(Which::MarkSum));
    }
    let marks = p.marks();
    let psi = |u: f64| -> Result<(f64, f64)> { Ok((h * marks.mgf_d1(u)? - 1.0, h * marks.mgf_d2(u)?)) };
    // psi(0) = h E[l] - 1 < 0 under stability
    let (hi, found) = expand_bracket(0.0, marks.mgf_domain_sup(), |u| Ok(psi(u)?.0))?;
    if !found {
        let x = marks.mgf(hi)?;
        return Ok(CriticalPoint {
            theta_c: hi - h * (x - 1.0),
            x_c: x,
            which: Which::MarkSum,
            status: CriticalStatus::DomainExhausted,
            residuals: (f64::NAN, f64::NAN),
        });
    }
    let u_star = safeguarded_newton(psi, 0.0, hi)?.x;
    let x_c = marks.mgf(u_star)?;
    let theta_c = u_star - h * (x_c - 1.0);
    let u = theta_c + h * (x_c - 1.0);
    let g = marks.mgf(u)? - x_c;
    let dg = h * marks.mgf_d1(u)? - 1.0;
    Ok(CriticalPoint {
        theta_c,
        x_c,
        which: Which::MarkSum,
        status: CriticalStatus::Tangent,
        residuals: (g.abs() / x_c.max(1.0), dg.abs()),
    })
}

pub fn critical_point(p: &ProcessParams, which: Which) -> Result<CriticalPoint> {
    match which {
        Which::Count => critical_point_n(p),
        Which::MarkSum => critical_point_l(p),
    }
}

// ---------------------------------------------------------------------------
// Limiting CGF
// ---------------------------------------------------------------------------

/// The limiting CGF at one `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfSolution {
    pub theta: f64,
    /// Minimal root of the fixed-point equation.
    pub x_star: f64,
    /// `nu (x_star - 1)`.
    pub gamma: f64,
    /// `Gamma'(theta)`; `+inf` at the critical point.
    pub gamma_prime: f64,
    pub iterations: usize,
    /// `|x_star - map(x_star)|`.
    pub residual: f64,
}

/// Limiting CGF of `N_t` or `L_t` with its critical point computed once.
#[derive(Debug, Clone)]
pub struct LimitCgf {
    params: ProcessParams,
    which: Which,
    critical: CriticalPoint,
}

impl LimitCgf {
    pub fn new(p: &ProcessParams, which: Which) -> Result<Self> {
        Ok(Self {
            params: p.clone(),
            which,
            critical: critical_point(p, which)?,
        })
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn which(&self) -> Which {
        self.which
    }

    pub fn critical(&self) -> &CriticalPoint {
        &self.critical
    }

    /// Right end of the effective domain `{theta : Gamma(theta) < inf}`.
    ///
    /// Equals `theta_c` except for the unexcited mark sum, where the mark MGF
    /// itself limits the domain.
    pub fn theta_max(&self) -> f64 {
        match (self.critical.status, self.which) {
            (CriticalStatus::Degenerate, Which::MarkSum) => self.params.marks().mgf_domain_sup(),
            _ => self.critical.theta_c,
        }
    }

    /// Whether `Gamma` is finite at `theta_max` itself.
    fn closed_at_max(&self) -> bool {
        self.critical.status != CriticalStatus::Degenerate
    }

    /// Fixed-point map and its derivative in `x`.
    fn map(&self, theta: f64, x: f64) -> Result<(f64, f64)> {
        let h = self.params.h();
        let marks = self.params.marks();
        match self.which {
            Which::Count => {
                let v = h * (x - 1.0);
                let e = theta.exp();
                Ok((e * marks.mgf(v)?, e * h * marks.mgf_d1(v)?))
            }
            Which::MarkSum => {
                let u = theta + h * (x - 1.0);
                Ok((marks.mgf(u)?, h * marks.mgf_d1(u)?))
            }
        }
    }

    fn above_critical(&self, theta: f64) -> Error {
        Error::ThetaAboveCritical {
            theta,
            theta_c: self.theta_max(),
        }
    }

    /// Solves for the minimal root at `theta`.
    pub fn solve(&self, theta: f64) -> Result<CgfSolution> {
        let nu = self.params.nu();
        if theta.is_nan() {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: "NaN".into(),
            });
        }
        if self.critical.status == CriticalStatus::Degenerate {
            return self.solve_unexcited(theta);
        }
        let theta_c = self.critical.theta_c;
        let x_c = self.critical.x_c;
        if theta > theta_c + THETA_C_SLACK {
            return Err(self.above_critical(theta));
        }
        if theta >= theta_c {
            return Ok(CgfSolution {
                theta,
                x_star: x_c,
                gamma: nu * (x_c - 1.0),
                gamma_prime: f64::INFINITY,
                iterations: 0,
                residual: (self.map(theta_c, x_c)?.0 - x_c).abs(),
            });
        }
        let (x, iterations) = if theta == 0.0 {
            (1.0, 0)
        } else {
            self.minimal_root(theta, x_c)?
        };
        let (fx, dfx) = self.map(theta, x)?;
        Ok(CgfSolution {
            theta,
            x_star: x,
            gamma: nu * (x - 1.0),
            gamma_prime: self.slope(theta, x, dfx).unwrap_or(f64::INFINITY),
            iterations,
            residual: (fx - x).abs(),
        })
    }

    fn minimal_root(&self, theta: f64, x_c: f64) -> Result<(f64, usize)> {
        // F(0) <= x* always; the map evaluated at x = 1 lies below x* for
        // theta > 0 and above it for theta < 0
        let at_zero = self.map(theta, 0.0)?.0;
        let at_one = self.map(theta, 1.0)?.0;
        let (lo, hi) = if theta < 0.0 {
            (at_zero, at_one.min(x_c))
        } else {
            (at_one.min(x_c), x_c)
        };
        let gap = |x: f64| -> Result<(f64, f64)> {
            let (f, df) = self.map(theta, x)?;
            Ok((f - x, df - 1.0))
        };
        // at or numerically on the tangency
        if gap(hi)?.0 > 0.0 {
            return Ok((hi, 0));
        }
        if gap(lo)?.0 <= 0.0 {
            return Ok((lo, 0));
        }
        let root = safeguarded_newton(gap, lo, hi)?;
        Ok((root.x, root.iterations))
    }

    fn solve_unexcited(&self, theta: f64) -> Result<CgfSolution> {
        let nu = self.params.nu();
        let (x, gamma, gamma_prime) = match self.which {
            Which::Count => (theta.exp(), nu * theta.exp_m1(), nu * theta.exp()),
            Which::MarkSum => {
                let marks = self.params.marks();
                if theta >= marks.mgf_domain_sup() {
                    return Err(self.above_critical(theta));
                }
                let m = marks.mgf(theta)?;
                (m, nu * (m - 1.0), nu * marks.mgf_d1(theta)?)
            }
        };
        Ok(CgfSolution {
            theta,
            x_star: x,
            gamma,
            gamma_prime,
            iterations: 0,
            residual: 0.0,
        })
    }

    /// Implicit derivative of `nu (x* - 1)` given the root and `map'(x*)`.
    fn slope(&self, theta: f64, x: f64, dmap: f64) -> Option<f64> {
        let denom = 1.0 - dmap;
        if denom <= SLOPE_DENOM_FLOOR {
            return None;
        }
        let nu = self.params.nu();
        let numer = match self.which {
            // d map / d theta = map(x) = x at the root
            Which::Count => x,
            Which::MarkSum => {
                let u = theta + self.params.h() * (x - 1.0);
                self.params.marks().mgf_d1(u).ok()?
            }
        };
        Some(nu * numer / denom)
    }

    pub fn gamma(&self, theta: f64) -> Result<f64> {
        Ok(self.solve(theta)?.gamma)
    }

    /// `Gamma'(theta)`, defined strictly below the critical point.
    pub fn gamma_prime(&self, theta: f64) -> Result<f64> {
        let at_critical = Error::ThetaAtCritical {
            theta,
            theta_c: self.theta_max(),
        };
        if self.closed_at_max() && theta >= self.theta_max() {
            return Err(if theta > self.theta_max() + THETA_C_SLACK {
                self.above_critical(theta)
            } else {
                at_critical
            });
        }
        let sol = self.solve(theta)?;
        if sol.gamma_prime.is_finite() {
            Ok(sol.gamma_prime)
        } else {
            Err(at_critical)
        }
    }
}

pub fn gamma_n(p: &ProcessParams, theta: f64) -> Result<CgfSolution> {
    LimitCgf::new(p, Which::Count)?.solve(theta)
}

pub fn gamma_l(p: &ProcessParams, theta: f64) -> Result<CgfSolution> {
    LimitCgf::new(p, Which::MarkSum)?.solve(theta)
}

pub fn gamma_prime_n(p: &ProcessParams, theta: f64) -> Result<f64> {
    LimitCgf::new(p, Which::Count)?.gamma_prime(theta)
}

pub fn gamma_prime_l(p: &ProcessParams, theta: f64) -> Result<f64> {
    LimitCgf::new(p, Which::MarkSum)?.gamma_prime(theta)
}

#[cfg(test)]
mod tests;
