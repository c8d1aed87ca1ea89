//! Oracles shared by the integration tests. Nothing here calls the
//! recursions under test.

#![allow(dead_code)]

use hawkes_ldp::kernel::ExcitationKernel;
use hawkes_ldp::marks::MarkDistribution;
use hawkes_ldp::process::ProcessParams;

pub fn params(nu: f64, weights: &[f64], marks: MarkDistribution) -> ProcessParams {
    let kernel = if weights.is_empty() {
        ExcitationKernel::zero()
    } else {
        ExcitationKernel::explicit(weights.to_vec()).unwrap()
    };
    ProcessParams::new(nu, kernel, marks).unwrap()
}

pub fn unit_marks() -> MarkDistribution {
    MarkDistribution::constant(1.0).unwrap()
}

/// Poisson probabilities `P(Z = k)` for `k = 0, 1, ...` until the remaining
/// upper tail is below `tail`.
pub fn poisson_pmf(mean: f64, tail: f64) -> Vec<f64> {
    let mut p = (-mean).exp();
    let mut out = vec![p];
    let mut mass = p;
    let mut k = 0.0;
    while 1.0 - mass > tail || k < mean {
        k += 1.0;
        p *= mean / k;
        out.push(p);
        mass += p;
        if p == 0.0 && k > mean {
            break;
        }
    }
    out
}

/// Law of the sum of `z` i.i.d. marks from a finite law `(value, prob)`,
/// by repeated convolution with equal sums merged.
pub fn sum_law(atoms: &[(f64, f64)], z: usize) -> Vec<(f64, f64)> {
    let mut law = vec![(0.0, 1.0)];
    for _ in 0..z {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(law.len() * atoms.len());
        for &(s, ps) in &law {
            for &(v, pv) in atoms {
                next.push((s + v, ps * pv));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, p) in next {
            match merged.last_mut() {
                Some(last) if (last.0 - v).abs() <= 1e-12 * v.max(1.0) => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        law = merged;
    }
    law
}

/// Result of exhaustive enumeration.
pub struct Enumerated {
    /// `(1/t) log E[exp(theta S_t)]`.
    pub cgf: f64,
    /// Total probability of the enumerated outcomes.
    pub mass: f64,
}

/// Exhaustive enumeration of `(Z_s, X_s)_{s<=t}` for a process with finite
/// marks `atoms` and kernel `weights`, truncating each Poisson draw once
/// its remaining tail is below `tail`. `count` selects `N_t` over `L_t`.
pub fn enumerate_cgf(
    nu: f64,
    weights: &[f64],
    atoms: &[(f64, f64)],
    theta: f64,
    t: usize,
    count: bool,
    tail: f64,
) -> Enumerated {
    struct Setup<'a> {
        nu: f64,
        weights: &'a [f64],
        theta: f64,
        t: usize,
        count: bool,
        tail: f64,
        laws: Vec<Vec<(f64, f64)>>,
    }
    fn go(c: &mut Setup, history: &mut Vec<f64>, atoms: &[(f64, f64)]) -> (f64, f64) {
        let (nu, weights, theta, t, count, tail) = (c.nu, c.weights, c.theta, c.t, c.count, c.tail);
        let s = history.len() + 1;
        if s > t {
            return (1.0, 1.0);
        }
        let mut lambda = nu;
        for (u, w) in weights.iter().enumerate() {
            if u + 1 < s {
                lambda += w * history[s - 2 - u];
            }
        }
        let (mut e, mut mass) = (0.0, 0.0);
        for (z, pz) in poisson_pmf(lambda, tail).into_iter().enumerate() {
            while c.laws.len() <= z {
                let next = sum_law(atoms, c.laws.len());
                c.laws.push(next);
            }
            for i in 0..c.laws[z].len() {
                let (x, px) = c.laws[z][i];
                let step = if count { z as f64 } else { x };
                history.push(x);
                let (ce, cm) = go(c, history, atoms);
                history.pop();
                e += pz * px * (theta * step).exp() * ce;
                mass += pz * px * cm;
            }
        }
        (e, mass)
    }
    let mut setup = Setup {
        nu,
        weights,
        theta,
        t,
        count,
        tail,
        laws: Vec::new(),
    };
    let (e, mass) = go(&mut setup, &mut Vec::new(), atoms);
    Enumerated {
        cgf: e.ln() / t as f64,
        mass,
    }
}

/// Exact `P(Poisson(mean) >= k)`, summing the upper tail directly.
pub fn poisson_upper_tail(mean: f64, k: u64) -> f64 {
    let mut term = (-mean).exp();
    for j in 0..k {
        term *= mean / (j + 1) as f64;
    }
    let (mut sum, mut j) = (0.0, k);
    while term > 1e-300 && j < k + 100_000 {
        sum += term;
        j += 1;
        term *= mean / j as f64;
    }
    sum
}
