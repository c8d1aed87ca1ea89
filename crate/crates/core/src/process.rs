//! Path simulation for the discrete-time marked Hawkes process.
//!
//! At each step `t = 1, 2, ...` the intensity is
//! `lambda_t = nu + sum_{s=1}^{t-1} alpha(s) X_{t-s}`, the event count is
//! `Z_t ~ Poisson(lambda_t)` and `X_t` is the sum of `Z_t` i.i.d. marks.
//! The history starts empty (`X_0 = N_0 = 0`).

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::kernel::ExcitationKernel;
use crate::marks::MarkDistribution;
use crate::rng::{path_stream, poisson};

// Poisson means past this lose integer resolution in f64 counts.
const MAX_INTENSITY: f64 = 1e15;

/// Baseline, kernel and mark law of a subcritical process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    nu: f64,
    kernel: ExcitationKernel,
    marks: MarkDistribution,
}

impl ProcessParams {
    /// Fails unless `nu > 0` and `||alpha||_1 E[l] < 1`.
    pub fn new(nu: f64, kernel: ExcitationKernel, marks: MarkDistribution) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("baseline must be finite and positive, got {nu}"),
            });
        }
        let margin = kernel.stability_margin(&marks);
        if margin <= 0.0 {
            return Err(Error::Stability { margin });
        }
        Ok(Self { nu, kernel, marks })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kernel(&self) -> &ExcitationKernel {
        &self.kernel
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    /// `||alpha||_1`.
    pub fn h(&self) -> f64 {
        self.kernel.l1_norm()
    }

    pub fn stability_margin(&self) -> f64 {
        self.kernel.stability_margin(&self.marks)
    }
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub seed: u64,
    pub lambda: Vec<f64>,
    pub z: Vec<u64>,
    pub x: Vec<f64>,
    pub n_final: u64,
    pub l_final: f64,
}

impl PathRecord {
    pub fn horizon(&self) -> usize {
        self.z.len()
    }

    /// Writes `t,lambda,z,x,n_cum,l_cum`, preceded by a `# seed=` line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "t,lambda,z,x,n_cum,l_cum")?;
        let (mut n, mut l) = (0u64, 0.0f64);
        for t in 0..self.horizon() {
            n += self.z[t];
            l += self.x[t];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t + 1,
                fmt_f64(self.lambda[t]),
                self.z[t],
                fmt_f64(self.x[t]),
                n,
                fmt_f64(l)
            )?;
        }
        Ok(())
    }
}

/// `nu + sum_{u=1}^{min(t-1, K)} alpha(u) X_{t-u}`, where `lagged(u)` yields
/// `X_{t-u}`. Simulation and replay both go through here so they agree bit
/// for bit.
#[inline]
fn intensity(nu: f64, weights: &[f64], available: usize, lagged: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for u in 1..=available.min(weights.len()) {
        acc += weights[u - 1] * lagged(u);
    }
    nu + acc
}

/// Runs one path, calling `on_step(t, lambda_t, z_t, x_t)` for `t = 1..=horizon`.
pub(crate) fn run_path<R: Rng + ?Sized>(
    p: &ProcessParams,
    horizon: usize,
    rng: &mut R,
    mut on_step: impl FnMut(usize, f64, u64, f64),
) -> Result<()> {
    let weights = p.kernel.weights();
    let k = weights.len();
    // ring[i % k] holds X_i
    let mut ring = vec![0.0f64; k.max(1)];
    for t in 1..=horizon {
        let lambda = intensity(p.nu, weights, t - 1, |u| ring[(t - u) % k]);
        if !(lambda.is_finite() && lambda <= MAX_INTENSITY) {
            return Err(Error::Resource { step: t, lambda });
        }
        let z = poisson(rng, lambda);
        let x = p.marks.sample_sum(z, rng);
        if k > 0 {
            ring[t % k] = x;
        }
        on_step(t, lambda, z, x);
    }
    Ok(())
}

/// Simulates `horizon` steps using stream 0 of `seed`.
pub fn simulate(p: &ProcessParams, horizon: usize, seed: u64) -> Result<PathRecord> {
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    let mut rec = PathRecord {
        seed,
        lambda: Vec::with_capacity(horizon),
        z: Vec::with_capacity(horizon),
        x: Vec::with_capacity(horizon),
        n_final: 0,
        l_final: 0.0,
    };
    let mut rng = path_stream(seed, 0);
    run_path(p, horizon, &mut rng, |_, lambda, z, x| {
        rec.lambda.push(lambda);
        rec.z.push(z);
        rec.x.push(x);
        rec.n_final += z;
        rec.l_final += x;
    })?;
    Ok(rec)
}

/// Recomputes `lambda_1..lambda_t` from the stored mark sums and checks them
/// against the record.
pub fn replay_intensity(pr: &PathRecord, p: &ProcessParams) -> Result<Vec<f64>> {
    let weights = p.kernel.weights();
    let mut out = Vec::with_capacity(pr.horizon());
    for t in 1..=pr.horizon() {
        let lambda = intensity(p.nu, weights, t - 1, |u| pr.x[t - u - 1]);
        let stored = pr.lambda[t - 1];
        if lambda.to_bits() != stored.to_bits() {
            return Err(Error::Consistency {
                step: t,
                stored,
                replayed: lambda,
            });
        }
        out.push(lambda);
    }
    Ok(out)
}
