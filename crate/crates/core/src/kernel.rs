//! Excitation weights `alpha(1), ..., alpha(K)` on the positive integers.

use crate::error::{Error, Result};
use crate::marks::MarkDistribution;

/// How a kernel was built.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelGenerator {
    Explicit,
    /// `alpha(t) = a * r^(t-1)` truncated after `len` lags.
    Geometric {
        a: f64,
        r: f64,
        len: usize,
    },
    /// `alpha(t) = a * t^(-p)` truncated after `len` lags.
    Power {
        a: f64,
        p: f64,
        len: usize,
    },
}

/// Finite-support excitation kernel. `K = 0` encodes `alpha = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationKernel {
    weights: Vec<f64>,
    generator: KernelGenerator,
    l1: f64,
    truncation_error: f64,
}

fn non_negative(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and non-negative, got {v}"),
        })
    }
}

/// Sum in descending-magnitude order so the result does not depend on how
/// the weights were listed.
fn ordered_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    sorted.iter().fold(0.0, |acc, w| acc + w)
}

impl ExcitationKernel {
    /// The zero kernel; the process reduces to a compound Poisson process.
    pub fn zero() -> Self {
        Self::build(Vec::new(), KernelGenerator::Explicit, 0.0)
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        for &w in &weights {
            non_negative("kernel.weights", w)?;
        }
        Ok(Self::build(weights, KernelGenerator::Explicit, 0.0))
    }

    pub fn geometric(a: f64, r: f64, len: usize) -> Result<Self> {
        let a = non_negative("kernel.a", a)?;
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidParameter {
                name: "kernel.r",
                reason: format!("ratio must lie in [0, 1), got {r}"),
            });
        }
        let weights = (0..len).map(|i| a * r.powi(i as i32)).collect();
        let tail = a * r.powi(len as i32) / (1.0 - r);
        Ok(Self::build(
            weights,
            KernelGenerator::Geometric { a, r, len },
            tail,
        ))
    }

    pub fn power(a: f64, p: f64, len: usize) -> Result<Self> {
        let a = non_negative("kernel.a", a)?;
        let p = non_negative("kernel.p", p)?;
        let weights = (1..=len).map(|t| a * (t as f64).powf(-p)).collect();
        // integral bound on the discarded tail; the full series diverges for p <= 1
        let tail = if a == 0.0 {
            0.0
        } else if p > 1.0 && len > 0 {
            a * (len as f64).powf(1.0 - p) / (p - 1.0)
        } else {
            f64::INFINITY
        };
        Ok(Self::build(weights, KernelGenerator::Power { a, p, len }, tail))
    }

    fn build(weights: Vec<f64>, generator: KernelGenerator, truncation_error: f64) -> Self {
        let l1 = ordered_sum(&weights);
        Self {
            weights,
            generator,
            l1,
            truncation_error,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Support length `K`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn generator(&self) -> &KernelGenerator {
        &self.generator
    }

    /// Upper bound on the l1 mass dropped by truncating an infinite family.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// `alpha(t)` for `t >= 1`; zero beyond the support.
    pub fn weight(&self, lag: usize) -> f64 {
        if lag == 0 {
            return 0.0;
        }
        self.weights.get(lag - 1).copied().unwrap_or(0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// `1 - ||alpha||_1 E[l]`; positive iff the process is subcritical.
    pub fn stability_margin(&self, marks: &MarkDistribution) -> f64 {
        1.0 - self.l1 * marks.mean()
    }

    /// `t^(-1/2) * sum_{u=1}^{t-1} sum_{s>u} alpha(s)`.
    ///
    /// Vanishes as `t` grows for every finite-support kernel.
    pub fn clt_tail_statistic(&self, t: u64) -> f64 {
        assert!(t >= 1, "horizon must be positive");
        let k = self.weights.len();
        // suffix[j] = sum_{s >= j+1} alpha(s), 0-based over lags
        let mut suffix = vec![0.0; k + 1];
        for j in (0..k).rev() {
            suffix[j] = suffix[j + 1] + self.weights[j];
        }
        let upper = ((t - 1) as usize).min(k.saturating_sub(1));
        // inner tail for lag u is sum over s >= u+1, i.e. suffix[u]
        let total: f64 = (1..=upper).fold(0.0, |acc, u| acc + suffix[u]);
        total / (t as f64).sqrt()
    }
}
