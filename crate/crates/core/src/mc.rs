//! Monte Carlo estimates for checking the analytic results.
//!
//! Path `i` of a batch draws from substream `(master_seed, i)` and per-path
//! totals are collected in index order. All reductions afterwards run on a
//! fixed pairwise tree, so every summary is a deterministic function of the
//! inputs regardless of how many workers simulated the paths.

use std::io::Write;

use rayon::prelude::*;

use crate::cgf::{finite_time_cgf, finite_time_moments, Which};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::moments::{lln_mean_l, lln_mean_n};
use crate::process::{run_path, ProcessParams};
use crate::rate::RateFunction;
use crate::rng::path_stream;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Sum over a balanced binary tree whose shape depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(f))
}

/// A point estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfEstimate {
    pub theta: f64,
    pub which: Which,
    pub estimate: f64,
    pub std_err: f64,
    /// Positive tilts weight rare large paths; the estimator is heavy tailed.
    pub positive_tilt: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub level: f64,
    pub which: Which,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `-(1/t) log p_hat`; `None` when no path reached the level.
    pub implied_rate: Option<f64>,
    /// Delta-method standard error of the implied rate.
    pub implied_rate_std_err: Option<f64>,
}

impl TailEstimate {
    pub fn zero_hits(&self) -> bool {
        self.hits == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub n_paths: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub mean_n_over_t: Estimate,
    pub var_n_clt_scaled: Estimate,
    pub mean_l_over_t: Estimate,
    pub var_l_clt_scaled: Estimate,
    pub empirical_cgf: Vec<CgfEstimate>,
    pub tail_estimates: Vec<TailEstimate>,
}

/// Final `(N_t, L_t)` of every path in a batch, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTotals {
    pub horizon: usize,
    pub master_seed: u64,
    pub n: Vec<u64>,
    pub l: Vec<f64>,
}

impl PathTotals {
    /// Simulates `n_paths` paths on the current rayon pool.
    pub fn simulate(p: &ProcessParams, horizon: usize, n_paths: usize, master_seed: u64) -> Result<Self> {
        if n_paths < 2 {
            return Err(Error::InvalidParameter {
                name: "n_paths",
                reason: format!("need at least 2 paths, got {n_paths}"),
            });
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be at least 1".into(),
            });
        }
        let totals: Vec<(u64, f64)> = (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_stream(master_seed, i);
                let (mut n, mut l) = (0u64, 0.0f64);
                run_path(p, horizon, &mut rng, |_, _, z, x| {
                    n += z;
                    l += x;
                })?;
                Ok((n, l))
            })
            .collect::<Result<_>>()?;
        let (n, l) = totals.into_iter().unzip();
        Ok(Self {
            horizon,
            master_seed,
            n,
            l,
        })
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    fn values(&self, which: Which) -> Vec<f64> {
        match which {
            Which::Count => self.n.iter().map(|&v| v as f64).collect(),
            Which::MarkSum => self.l.clone(),
        }
    }

    /// Sample mean of `S_t / t`.
    pub fn mean_over_t(&self, which: Which) -> Estimate {
        let t = self.horizon as f64;
        let v: Vec<f64> = self.values(which).into_iter().map(|s| s / t).collect();
        let (mean, var) = mean_var(&v);
        Estimate {
            value: mean,
            std_err: (var / v.len() as f64).sqrt(),
        }
    }

    /// Sample variance of `(S_t - center t) / sqrt(t)` with a fourth-moment
    /// standard error.
    pub fn var_clt_scaled(&self, which: Which, center: f64) -> Estimate {
        let t = self.horizon as f64;
        let v: Vec<f64> = self
            .values(which)
            .into_iter()
            .map(|s| (s - center * t) / t.sqrt())
            .collect();
        let n = v.len() as f64;
        let (mean, var) = mean_var(&v);
        let fourth: Vec<f64> = v.iter().map(|y| (y - mean).powi(4)).collect();
        let m4 = pairwise_sum(&fourth) / n;
        Estimate {
            value: var,
            std_err: ((m4 - var * var).max(0.0) / n).sqrt(),
        }
    }

    /// `(1/t) log` of the sample mean of `exp(theta S_t)`, delta-method SE.
    pub fn empirical_cgf(&self, theta: f64, which: Which) -> Result<CgfEstimate> {
        let t = self.horizon as f64;
        let logs: Vec<f64> = self.values(which).into_iter().map(|s| theta * s).collect();
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::EstimatorDegenerate(format!(
                "all weights exp(theta S_t) vanish or overflow at theta = {theta}"
            )));
        }
        let w: Vec<f64> = logs.iter().map(|v| (v - shift).exp()).collect();
        let (mean, var) = mean_var(&w);
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::EstimatorDegenerate(format!(
                "sample mean of weights is {mean} at theta = {theta}"
            )));
        }
        let n = w.len() as f64;
        Ok(CgfEstimate {
            theta,
            which,
            estimate: (shift + mean.ln()) / t,
            std_err: var.sqrt() / (n.sqrt() * mean * t),
            positive_tilt: theta > 0.0,
        })
    }

    /// Fraction of paths with `S_t / t >= level`, with a Wilson 95% interval.
    pub fn tail(&self, level: f64, which: Which) -> TailEstimate {
        let t = self.horizon as f64;
        let n = self.len() as f64;
        let hits = self.values(which).into_iter().filter(|&s| s / t >= level).count() as u64;
        let p = hits as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        let (implied_rate, implied_rate_std_err) = if hits == 0 {
            (None, None)
        } else {
            (Some(-p.ln() / t), Some(((1.0 - p) / (n * p)).sqrt() / t))
        };
        TailEstimate {
            level,
            which,
            hits,
            p_hat: p,
            // the Wilson bounds are exactly 0 and 1 at the extremes
            ci_low: if hits == 0 { 0.0 } else { (center - half).max(0.0) },
            ci_high: if hits == self.len() as u64 {
                1.0
            } else {
                (center + half).min(1.0)
            },
            implied_rate,
            implied_rate_std_err,
        }
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

/// LLN and CLT statistics from `n_paths` simulated paths.
pub fn estimate_limits(p: &ProcessParams, horizon: usize, n_paths: usize, seed: u64) -> Result<McSummary> {
    let totals = PathTotals::simulate(p, horizon, n_paths, seed)?;
    summarize(p, &totals)
}

fn summarize(p: &ProcessParams, totals: &PathTotals) -> Result<McSummary> {
    Ok(McSummary {
        n_paths: totals.len(),
        horizon: totals.horizon,
        master_seed: totals.master_seed,
        mean_n_over_t: totals.mean_over_t(Which::Count),
        var_n_clt_scaled: totals.var_clt_scaled(Which::Count, lln_mean_n(p)?),
        mean_l_over_t: totals.mean_over_t(Which::MarkSum),
        var_l_clt_scaled: totals.var_clt_scaled(Which::MarkSum, lln_mean_l(p)?),
        empirical_cgf: Vec::new(),
        tail_estimates: Vec::new(),
    })
}

pub fn empirical_cgf(
    p: &ProcessParams,
    theta: f64,
    horizon: usize,
    n_paths: usize,
    seed: u64,
    which: Which,
) -> Result<CgfEstimate> {
    PathTotals::simulate(p, horizon, n_paths, seed)?.empirical_cgf(theta, which)
}

pub fn tail_probability(
    p: &ProcessParams,
    level: f64,
    horizon: usize,
    n_paths: usize,
    seed: u64,
    which: Which,
) -> Result<TailEstimate> {
    Ok(PathTotals::simulate(p, horizon, n_paths, seed)?.tail(level, which))
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub metric: String,
    pub analytic: f64,
    pub estimate: f64,
    pub std_err: f64,
    /// `None` where the analytic value is a limit the finite-horizon
    /// estimate is not expected to match (tail rates).
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub summary: McSummary,
    pub rows: Vec<ValidationRow>,
}

/// Reports at or above this |z| count as a breach.
pub const Z_BREACH: f64 = 4.0;

impl ValidationReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.z_score)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn breached(&self) -> bool {
        self.rows
            .iter()
            .filter_map(|r| r.z_score)
            // NaN counts as a breach
            .any(|z| z.is_nan() || z.abs() > Z_BREACH)
    }

    /// `metric,analytic,estimate,std_err,z_score`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,analytic,estimate,std_err,z_score")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.metric,
                fmt_f64(r.analytic),
                fmt_f64(r.estimate),
                fmt_f64(r.std_err),
                r.z_score.map(fmt_f64).unwrap_or_default()
            )?;
        }
        Ok(())
    }
}

fn z(analytic: f64, estimate: f64, std_err: f64) -> f64 {
    if std_err > 0.0 {
        (estimate - analytic) / std_err
    } else if estimate == analytic {
        0.0
    } else {
        f64::INFINITY
    }
}

fn suffix(which: Which) -> &'static str {
    match which {
        Which::Count => "n",
        Which::MarkSum => "l",
    }
}

/// Simulates one batch and compares it against exact finite-horizon values:
/// means and scaled variances, empirical CGFs at `thetas`, and implied tail
/// rates at `levels` (reported against the limiting rate function, ungated).
pub fn validate(
    p: &ProcessParams,
    horizon: usize,
    n_paths: usize,
    seed: u64,
    thetas: &[f64],
    levels: &[f64],
) -> Result<ValidationReport> {
    let totals = PathTotals::simulate(p, horizon, n_paths, seed)?;
    let mut summary = summarize(p, &totals)?;
    let mut rows = Vec::new();
    for which in [Which::Count, Which::MarkSum] {
        let (mean, var) = finite_time_moments(p, which, horizon)?;
        let est_mean = totals.mean_over_t(which);
        // center at the exact finite-horizon mean so the variance is unbiased
        let est_var = totals.var_clt_scaled(which, mean);
        let tag = suffix(which);
        rows.push(ValidationRow {
            metric: format!("mean_{tag}_over_t"),
            analytic: mean,
            estimate: est_mean.value,
            std_err: est_mean.std_err,
            z_score: Some(z(mean, est_mean.value, est_mean.std_err)),
        });
        rows.push(ValidationRow {
            metric: format!("var_{tag}_clt_scaled"),
            analytic: var,
            estimate: est_var.value,
            std_err: est_var.std_err,
            z_score: Some(z(var, est_var.value, est_var.std_err)),
        });
    }
    for which in [Which::Count, Which::MarkSum] {
        for &theta in thetas {
            let est = totals.empirical_cgf(theta, which)?;
            let exact = finite_time_cgf(p, which, theta, horizon)?;
            rows.push(ValidationRow {
                metric: format!("cgf_{}(theta={theta})", suffix(which)),
                analytic: exact,
                estimate: est.estimate,
                std_err: est.std_err,
                z_score: Some(z(exact, est.estimate, est.std_err)),
            });
            summary.empirical_cgf.push(est);
        }
    }
    for which in [Which::Count, Which::MarkSum] {
        let rate = RateFunction::new(p, which)?;
        for &level in levels {
            let tail = totals.tail(level, which);
            rows.push(ValidationRow {
                metric: format!("tail_rate_{}(a={level})", suffix(which)),
                analytic: rate.eval(level)?.rate,
                estimate: tail.implied_rate.unwrap_or(f64::INFINITY),
                std_err: tail.implied_rate_std_err.unwrap_or(f64::INFINITY),
                z_score: None,
            });
            summary.tail_estimates.push(tail);
        }
    }
    Ok(ValidationReport { summary, rows })
}
