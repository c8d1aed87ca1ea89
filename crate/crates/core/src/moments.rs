//! Law-of-large-numbers and central-limit constants for `N_t` and `L_t`.

use crate::error::{Error, Result};
use crate::process::ProcessParams;

fn margin(p: &ProcessParams) -> Result<f64> {
    let m = p.stability_margin();
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::Stability { margin: m })
    }
}

/// `lim N_t / t = nu / (1 - h E[l])`.
pub fn lln_mean_n(p: &ProcessParams) -> Result<f64> {
    Ok(p.nu() / margin(p)?)
}

/// `lim L_t / t = nu E[l] / (1 - h E[l])`.
pub fn lln_mean_l(p: &ProcessParams) -> Result<f64> {
    Ok(p.nu() * p.marks().mean() / margin(p)?)
}

/// Limiting variance of `(N_t - t lln_mean_n) / sqrt(t)`:
/// `nu (1 + h^2 Var(l)) / (1 - h E[l])^3`.
pub fn clt_var_n(p: &ProcessParams) -> Result<f64> {
    let d = margin(p)?;
    let h = p.h();
    Ok(p.nu() * (1.0 + h * h * p.marks().variance()) / (d * d * d))
}

/// Limiting variance of `(L_t - t lln_mean_l) / sqrt(t)`:
/// `nu E[l^2] / (1 - h E[l])^3`.
pub fn clt_var_l(p: &ProcessParams) -> Result<f64> {
    let d = margin(p)?;
    Ok(p.nu() * p.marks().moment(2)? / (d * d * d))
}

/// All limit constants together with the CLT side-condition statistic at `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConstants {
    pub lln_mean_n: f64,
    pub lln_mean_l: f64,
    pub clt_var_n: f64,
    pub clt_var_l: f64,
    pub stability_margin: f64,
    pub clt_tail_statistic: f64,
}

pub fn limit_constants(p: &ProcessParams, horizon: u64) -> Result<LimitConstants> {
    Ok(LimitConstants {
        lln_mean_n: lln_mean_n(p)?,
        lln_mean_l: lln_mean_l(p)?,
        clt_var_n: clt_var_n(p)?,
        clt_var_l: clt_var_l(p)?,
        stability_margin: p.stability_margin(),
        clt_tail_statistic: p.kernel().clt_tail_statistic(horizon.max(1)),
    })
}
