//! Mark laws for the i.i.d. positive marks attached to each event.
//!
//! Only light-tailed families with a closed-form moment generating function
//! are representable. Each law knows the supremum of its MGF domain;
//! evaluation at or beyond that point is a [`Error::Domain`].

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};

const DISCRETE_PROB_TOL: f64 = 1e-12;

/// The family and parameters of a mark law.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkLaw {
    /// Point mass at `c`.
    Constant { c: f64 },
    /// Density `beta * exp(-beta x)`.
    Exponential { beta: f64 },
    /// Gamma law with the given shape and scale.
    Gamma { shape: f64, scale: f64 },
    /// Finitely supported law on distinct positive values.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

/// A validated mark law. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkDistribution {
    law: MarkLaw,
    // cumulative probabilities for Discrete sampling
    cumulative: Vec<f64>,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be a finite positive number, got {v}"),
        })
    }
}

impl MarkDistribution {
    pub fn constant(c: f64) -> Result<Self> {
        let c = positive("mark.c", c)?;
        Ok(Self::from_law(MarkLaw::Constant { c }))
    }

    pub fn exponential(beta: f64) -> Result<Self> {
        let beta = positive("mark.beta", beta)?;
        Ok(Self::from_law(MarkLaw::Exponential { beta }))
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let shape = positive("mark.shape", shape)?;
        let scale = positive("mark.scale", scale)?;
        Ok(Self::from_law(MarkLaw::Gamma { shape, scale }))
    }

    /// Finite law on `values` with weights `probs`.
    ///
    /// Weights must be non-negative and sum to one within `1e-12`; they are
    /// rescaled to sum exactly to one. Values must be distinct and positive.
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "mark.values",
                reason: "at least one value is required".into(),
            });
        }
        if values.len() != probs.len() {
            return Err(Error::InvalidParameter {
                name: "mark.probs",
                reason: format!("{} probabilities for {} values", probs.len(), values.len()),
            });
        }
        for &v in &values {
            positive("mark.values", v)?;
        }
        for (i, a) in values.iter().enumerate() {
            if values[..i].contains(a) {
                return Err(Error::InvalidParameter {
                    name: "mark.values",
                    reason: format!("duplicate value {a}"),
                });
            }
        }
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "mark.probs",
                reason: "probabilities must be finite and non-negative".into(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() >= DISCRETE_PROB_TOL {
            return Err(Error::InvalidParameter {
                name: "mark.probs",
                reason: format!("probabilities sum to {total}, not 1"),
            });
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self::from_law(MarkLaw::Discrete { values, probs }))
    }

    fn from_law(law: MarkLaw) -> Self {
        let cumulative = match &law {
            MarkLaw::Discrete { probs, .. } => {
                let mut acc = 0.0;
                probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Self { law, cumulative }
    }

    pub fn law(&self) -> &MarkLaw {
        &self.law
    }

    /// Supremum of `{s : E[exp(s l)] < inf}`.
    pub fn mgf_domain_sup(&self) -> f64 {
        match &self.law {
            MarkLaw::Constant { .. } | MarkLaw::Discrete { .. } => f64::INFINITY,
            MarkLaw::Exponential { beta } => *beta,
            MarkLaw::Gamma { scale, .. } => 1.0 / scale,
        }
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let sup = self.mgf_domain_sup();
        if s.is_nan() || s >= sup {
            Err(Error::Domain { s, sup })
        } else {
            Ok(())
        }
    }

    /// `E[exp(s l)]`.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.law {
            MarkLaw::Constant { c } => (s * c).exp(),
            MarkLaw::Exponential { beta } => beta / (beta - s),
            MarkLaw::Gamma { shape, scale } => (1.0 - s * scale).powf(-shape),
            MarkLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * (s * v).exp()).sum()
            }
        })
    }

    /// `E[l exp(s l)]`, the first derivative of [`mgf`](Self::mgf).
    pub fn mgf_d1(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.law {
            MarkLaw::Constant { c } => c * (s * c).exp(),
            MarkLaw::Exponential { beta } => beta / ((beta - s) * (beta - s)),
            MarkLaw::Gamma { shape, scale } => shape * scale * (1.0 - s * scale).powf(-shape - 1.0),
            MarkLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * v * (s * v).exp()).sum()
            }
        })
    }

    /// `E[l^2 exp(s l)]`, the second derivative of [`mgf`](Self::mgf).
    pub fn mgf_d2(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.law {
            MarkLaw::Constant { c } => c * c * (s * c).exp(),
            MarkLaw::Exponential { beta } => 2.0 * beta / (beta - s).powi(3),
            MarkLaw::Gamma { shape, scale } => {
                shape * (shape + 1.0) * scale * scale * (1.0 - s * scale).powf(-shape - 2.0)
            }
            MarkLaw::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(v, p)| p * v * v * (s * v).exp())
                .sum(),
        })
    }

    /// Raw moment `E[l^k]` for `k` in `1..=4`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if !(1..=4).contains(&k) {
            return Err(Error::InvalidOrder(k));
        }
        let kf = k as f64;
        Ok(match &self.law {
            MarkLaw::Constant { c } => c.powi(k as i32),
            MarkLaw::Exponential { beta } => {
                let fact: f64 = (1..=k).map(f64::from).product();
                fact / beta.powi(k as i32)
            }
            MarkLaw::Gamma { shape, scale } => {
                // rising factorial shape (shape+1) ... (shape+k-1)
                let rising: f64 = (0..k).map(|j| shape + f64::from(j)).product();
                rising * scale.powf(kf)
            }
            MarkLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * v.powi(k as i32)).sum()
            }
        })
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).expect("order 1 is valid")
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.mean();
        match &self.law {
            MarkLaw::Constant { .. } => 0.0,
            _ => (self.moment(2).expect("order 2 is valid") - m1 * m1).max(0.0),
        }
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            MarkLaw::Constant { c } => *c,
            MarkLaw::Exponential { beta } => Exp::new(*beta).expect("validated rate").sample(rng),
            MarkLaw::Gamma { shape, scale } => Gamma::new(*shape, *scale)
                .expect("validated parameters")
                .sample(rng),
            MarkLaw::Discrete { values, .. } => {
                let u: f64 = rng.random();
                let idx = self.cumulative.partition_point(|&c| c <= u);
                values[idx.min(values.len() - 1)]
            }
        }
    }

    /// Sum of `n` independent draws. Constant marks give exactly `c * n`.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        match &self.law {
            MarkLaw::Constant { c } => c * n as f64,
            _ => {
                let mut acc = 0.0;
                for _ in 0..n {
                    acc += self.sample(rng);
                }
                acc
            }
        }
    }
}
