use super::*;
use crate::kernel::ExcitationKernel;
use crate::marks::MarkDistribution;
use crate::moments::{clt_var_l, clt_var_n, lln_mean_l, lln_mean_n};

fn params(nu: f64, weights: Vec<f64>, marks: MarkDistribution) -> ProcessParams {
    ProcessParams::new(nu, ExcitationKernel::explicit(weights).unwrap(), marks).unwrap()
}

fn unmarked(h: f64) -> ProcessParams {
    params(1.0, vec![h], MarkDistribution::constant(1.0).unwrap())
}

fn zoo() -> Vec<ProcessParams> {
    vec![
        unmarked(0.5),
        params(0.7, vec![0.3, 0.2], MarkDistribution::exponential(4.0).unwrap()),
        params(
            1.2,
            vec![0.25, 0.1, 0.05],
            MarkDistribution::gamma(2.0, 0.5).unwrap(),
        ),
        params(
            0.5,
            vec![0.2, 0.2],
            MarkDistribution::discrete(vec![0.5, 1.5], vec![0.4, 0.6]).unwrap(),
        ),
    ]
}

/// Plain bisection for the smallest x in [0, hi] with f(x) <= 0, f convex
/// and positive at 0. Independent of the solver under test.
fn bisect_first_nonpositive(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn finite_time_single_step_is_poisson() {
    for p in zoo() {
        for &theta in &[-1.0, -0.1, 0.05, 0.2] {
            let n = finite_time_cgf_n(&p, theta, 1).unwrap();
            assert!((n - p.nu() * theta.exp_m1()).abs() < 1e-14);
            let l = finite_time_cgf_l(&p, theta, 1).unwrap();
            let m = p.marks().mgf(theta).unwrap();
            assert!((l - p.nu() * (m - 1.0)).abs() < 1e-14);
        }
    }
}

#[test]
fn finite_time_two_steps_single_lag() {
    let (nu, a) = (0.8, 0.4);
    let p = params(nu, vec![a], MarkDistribution::constant(1.0).unwrap());
    for &theta in &[-0.7f64, 0.3] {
        let f1 = theta + theta.exp_m1() * a;
        let expected = nu / 2.0 * (f1.exp_m1() + theta.exp_m1());
        let got = finite_time_cgf_n(&p, theta, 2).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }
}

#[test]
fn finite_time_at_zero_tilt_vanishes() {
    for p in zoo() {
        for t in [1, 2, 17, 300] {
            assert_eq!(finite_time_cgf_n(&p, 0.0, t).unwrap(), 0.0);
            assert_eq!(finite_time_cgf_l(&p, 0.0, t).unwrap(), 0.0);
        }
    }
    assert!(finite_time_cgf_n(&unmarked(0.5), 0.1, 0).is_err());
}

#[test]
fn unit_marks_make_both_cgfs_equal() {
    let p = params(1.3, vec![0.3, 0.15], MarkDistribution::constant(1.0).unwrap());
    for &theta in &[-2.0, -0.3, 0.01, 0.1] {
        for t in [1, 5, 60] {
            let n = finite_time_cgf_n(&p, theta, t).unwrap();
            let l = finite_time_cgf_l(&p, theta, t).unwrap();
            assert!((n - l).abs() < 1e-12 * n.abs().max(1.0));
        }
    }
}

#[test]
fn finite_time_tilt_too_large() {
    // exponential marks: the recursion argument eventually crosses beta
    let p = params(1.0, vec![0.5], MarkDistribution::exponential(1.0).unwrap());
    let cp = critical_point_n(&p).unwrap();
    let err = finite_time_cgf_n(&p, cp.theta_c + 0.5, 5000).unwrap_err();
    assert!(matches!(err, Error::TiltTooLarge { .. }));
    assert!(matches!(
        finite_time_cgf_l(&p, 1.0, 3),
        Err(Error::TiltTooLarge { step: 0, .. })
    ));
}

#[test]
fn finite_time_moments_match_finite_differences() {
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let t = 40;
            let (mean, var) = finite_time_moments(&p, which, t).unwrap();
            let e = 1e-4;
            let c = |th: f64| finite_time_cgf(&p, which, th, t).unwrap();
            let d1 = (c(e) - c(-e)) / (2.0 * e);
            let d2 = (c(e) - 2.0 * c(0.0) + c(-e)) / (e * e);
            assert!((d1 - mean).abs() < 1e-7 * mean, "{which:?} {d1} {mean}");
            assert!((d2 - var).abs() < 1e-5 * var, "{which:?} {d2} {var}");
        }
    }
}

#[test]
fn finite_time_moments_converge_to_limit_constants() {
    for p in zoo() {
        let (m, v) = finite_time_moments(&p, Which::Count, 20_000).unwrap();
        assert!((m - lln_mean_n(&p).unwrap()).abs() < 1e-2);
        assert!((v - clt_var_n(&p).unwrap()).abs() / v < 1e-2);
        let (m, v) = finite_time_moments(&p, Which::MarkSum, 20_000).unwrap();
        assert!((m - lln_mean_l(&p).unwrap()).abs() < 1e-2);
        assert!((v - clt_var_l(&p).unwrap()).abs() / v < 1e-2);
    }
    // unexcited: exact Poisson and compound Poisson values at every horizon
    let p = ProcessParams::new(
        2.0,
        ExcitationKernel::zero(),
        MarkDistribution::exponential(2.0).unwrap(),
    )
    .unwrap();
    assert_eq!(finite_time_moments(&p, Which::Count, 7).unwrap(), (2.0, 2.0));
    let (m, v) = finite_time_moments(&p, Which::MarkSum, 7).unwrap();
    assert!((m - 1.0).abs() < 1e-15 && (v - 1.0).abs() < 1e-15);
}

#[test]
fn unmarked_critical_point_closed_form() {
    for &h in &[0.1, 0.3, 0.5, 0.8, 0.95] {
        let p = unmarked(h);
        for cp in [critical_point_n(&p).unwrap(), critical_point_l(&p).unwrap()] {
            assert_eq!(cp.status, CriticalStatus::Tangent);
            assert!((cp.theta_c - (h - 1.0 - h.ln())).abs() < 1e-12, "{cp:?}");
            assert!((cp.x_c - 1.0 / h).abs() < 1e-10 * cp.x_c);
            assert!(cp.residuals.0 <= 1e-10 && cp.residuals.1 <= 1e-10);
        }
    }
    let cp = critical_point_n(&unmarked(0.5)).unwrap();
    assert!((cp.x_c - 2.0).abs() < 1e-12);
    assert!((cp.theta_c - 0.193_147_180_559_945_3).abs() < 1e-12);
}

#[test]
fn degenerate_kernel_sentinel() {
    let p = ProcessParams::new(
        1.0,
        ExcitationKernel::zero(),
        MarkDistribution::exponential(2.0).unwrap(),
    )
    .unwrap();
    for cp in [critical_point_n(&p).unwrap(), critical_point_l(&p).unwrap()] {
        assert_eq!(cp.status, CriticalStatus::Degenerate);
        assert!(cp.theta_c.is_infinite() && cp.theta_c > 0.0);
    }
}

#[test]
fn exponential_marks_critical_point_vs_grid_scan() {
    let beta = 4.0;
    let h = 0.5;
    let p = params(1.0, vec![h], MarkDistribution::exponential(beta).unwrap());
    let cp = critical_point_n(&p).unwrap();
    assert!(cp.residuals.0 <= 1e-10 && cp.residuals.1 <= 1e-10, "{cp:?}");
    // phi(x) = x h M'(h(x-1)) - M(h(x-1)) written out for the exponential law
    let phi = |x: f64| {
        let v = h * (x - 1.0);
        x * h * beta / (beta - v).powi(2) - beta / (beta - v)
    };
    let edge = 1.0 + beta / h;
    let n = 2_000_000;
    let mut changes = Vec::new();
    let mut prev = phi(1.0);
    for i in 1..n {
        let x = 1.0 + (edge - 1.0) * i as f64 / n as f64;
        let cur = phi(x);
        if prev.signum() != cur.signum() {
            changes.push(x);
        }
        prev = cur;
    }
    assert_eq!(changes.len(), 1);
    assert!((changes[0] - cp.x_c).abs() <= (edge - 1.0) / n as f64 + 1e-12);
    assert!(cp.theta_c > 0.0);
}

/// Nested-bisection oracle for the mark-sum tangency: bisection on theta
/// over the sign of min_x G(x; theta), the inner minimum located by
/// bisecting G' (G convex in x).
fn nested_critical_l(p: &ProcessParams) -> (f64, f64) {
    let h = p.h();
    let m = p.marks();
    let sup = m.mgf_domain_sup();
    let min_gap = |theta: f64| -> (f64, f64) {
        // G'(x) = h M'(theta + h(x-1)) - 1, increasing in x
        let x_edge = if sup.is_finite() {
            1.0 + (sup - theta) / h
        } else {
            1e6
        };
        let (mut lo, mut hi) = (0.0, x_edge);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            let u = theta + h * (mid - 1.0);
            if u >= sup || h * m.mgf_d1(u).unwrap() - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        (m.mgf(theta + h * (x - 1.0)).unwrap() - x, x)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while min_gap(hi).0 < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if min_gap(mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    (theta, min_gap(theta).1)
}

#[test]
fn mark_sum_critical_point_matches_nested_bisection() {
    for p in zoo() {
        let cp = critical_point_l(&p).unwrap();
        assert!(cp.residuals.0 <= 1e-10 && cp.residuals.1 <= 1e-10, "{cp:?}");
        assert!(cp.theta_c > 0.0);
        let (theta, x) = nested_critical_l(&p);
        assert!((theta - cp.theta_c).abs() < 1e-9, "{theta} vs {}", cp.theta_c);
        // x is only determined to ~sqrt(eps) by a flat minimum
        assert!((x - cp.x_c).abs() < 1e-6 * cp.x_c, "{x} vs {}", cp.x_c);
    }
}

#[test]
fn scaled_constant_marks_halve_mark_sum_threshold() {
    let two = params(1.0, vec![0.25], MarkDistribution::constant(2.0).unwrap());
    let l = critical_point_l(&two).unwrap();
    let n = critical_point_n(&unmarked(0.5)).unwrap();
    assert!((l.theta_c - n.theta_c / 2.0).abs() < 1e-12);
    assert!((l.x_c - n.x_c).abs() < 1e-12);
}

#[test]
fn gamma_at_zero_and_poisson_reduction() {
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let s = cgf.solve(0.0).unwrap();
            assert_eq!((s.x_star, s.gamma), (1.0, 0.0));
            let mean = match which {
                Which::Count => lln_mean_n(&p).unwrap(),
                Which::MarkSum => lln_mean_l(&p).unwrap(),
            };
            assert!((cgf.gamma_prime(0.0).unwrap() - mean).abs() < 1e-10);
        }
    }
    let p = ProcessParams::new(
        1.5,
        ExcitationKernel::zero(),
        MarkDistribution::gamma(2.0, 0.5).unwrap(),
    )
    .unwrap();
    for &theta in &[-3.0, -0.2, 0.4, 1.9] {
        let n = gamma_n(&p, theta).unwrap();
        assert!((n.gamma - 1.5 * theta.exp_m1()).abs() < 1e-14);
        assert!((gamma_prime_n(&p, theta).unwrap() - 1.5 * theta.exp()).abs() < 1e-13);
        let l = gamma_l(&p, theta).unwrap();
        let m = p.marks().mgf(theta).unwrap();
        assert!((l.gamma - 1.5 * (m - 1.0)).abs() < 1e-14);
    }
    // the unexcited mark sum is still limited by the mark MGF domain
    assert!(matches!(gamma_l(&p, 2.0), Err(Error::ThetaAboveCritical { .. })));
}

#[test]
fn gamma_matches_two_oracles() {
    let p = unmarked(0.5);
    let theta = 0.1;
    let sol = gamma_n(&p, theta).unwrap();
    let oracle = bisect_first_nonpositive(|x| (theta + 0.5 * (x - 1.0)).exp() - x, 2.0);
    assert!((sol.x_star - oracle).abs() < 1e-12, "{} vs {oracle}", sol.x_star);
    assert!(sol.residual <= 1e-12 * sol.x_star.max(1.0));
    let finite = finite_time_cgf_n(&p, theta, 4000).unwrap();
    assert!((finite - sol.gamma).abs() < 5e-3);
}

#[test]
fn gamma_solutions_satisfy_invariants() {
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let cp = *cgf.critical();
            for i in 0..40 {
                let theta = -8.0 + (cp.theta_c + 8.0) * i as f64 / 39.0;
                let s = cgf.solve(theta).unwrap();
                assert!(s.residual <= 1e-12 * s.x_star.max(1.0), "{which:?} {s:?}");
                assert!(s.x_star > 0.0 && s.x_star <= cp.x_c);
            }
            assert!(matches!(
                cgf.solve(cp.theta_c + 1e-6),
                Err(Error::ThetaAboveCritical { .. })
            ));
            let at = cgf.solve(cp.theta_c).unwrap();
            assert_eq!(at.x_star, cp.x_c);
            assert!(matches!(
                cgf.gamma_prime(cp.theta_c),
                Err(Error::ThetaAtCritical { .. })
            ));
        }
    }
}

#[test]
fn very_negative_tilts_resolve_tiny_roots() {
    let p = zoo()[1].clone();
    let cgf = LimitCgf::new(&p, Which::Count).unwrap();
    let s = cgf.solve(-600.0).unwrap();
    // x* = e^theta M(h(x*-1)) with x* ~ 0
    let expected = (-600.0f64).exp() * p.marks().mgf(-p.h()).unwrap();
    assert!((s.x_star / expected - 1.0).abs() < 1e-12);
    assert!((s.gamma + p.nu()).abs() < 1e-12);
}

#[test]
fn recursion_is_monotone_and_bounded_by_minimal_root() {
    let mut checked = 0;
    for p in zoo() {
        let cgf = LimitCgf::new(&p, Which::Count).unwrap();
        let tc = cgf.critical().theta_c;
        for &theta in &[-1.5, -0.4, 0.3 * tc, 0.6 * tc, 0.9 * tc] {
            let x_star = cgf.solve(theta).unwrap().x_star;
            let seq = count_recursion(&p, theta, 300).unwrap();
            for w in seq.windows(2) {
                if theta < 0.0 {
                    assert!(w[1] <= w[0] + 1e-15);
                } else {
                    assert!(w[1] >= w[0] - 1e-15);
                }
            }
            for &v in &seq {
                if theta < 0.0 {
                    assert!(v >= x_star - 1e-12);
                } else {
                    assert!(v <= x_star + 1e-12);
                }
            }
            assert!((seq[299] - x_star).abs() < 1e-6);
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn finite_horizon_error_shrinks() {
    for p in zoo() {
        let cgf = LimitCgf::new(&p, Which::Count).unwrap();
        let tc = cgf.critical().theta_c;
        for &theta in &[-0.5, 0.5 * tc] {
            let limit = cgf.gamma(theta).unwrap();
            let mut prev = f64::INFINITY;
            for t in [250, 500, 1000, 2000, 4000] {
                let err = (finite_time_cgf_n(&p, theta, t).unwrap() - limit).abs();
                assert!(err < prev);
                prev = err;
            }
            assert!(prev < 5e-3);
        }
    }
}

#[test]
fn gamma_is_convex_and_increasing() {
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let tc = cgf.critical().theta_c;
            let grid: Vec<f64> = (0..60).map(|i| -4.0 + (tc + 4.0) * i as f64 / 59.0).collect();
            let g: Vec<f64> = grid.iter().map(|&t| cgf.gamma(t).unwrap()).collect();
            for i in 1..grid.len() - 1 {
                assert!(g[i] > g[i - 1]);
                let step = grid[1] - grid[0];
                assert!((g[i + 1] - 2.0 * g[i] + g[i - 1]) / (step * step) >= -1e-8);
            }
        }
    }
}

#[test]
fn gamma_prime_matches_finite_differences() {
    let step = 1e-6;
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let tc = cgf.critical().theta_c;
            for i in 0..20 {
                let theta = -3.0 + (0.9 * tc + 3.0) * i as f64 / 19.0;
                let fd = (cgf.gamma(theta + step).unwrap() - cgf.gamma(theta - step).unwrap()) / (2.0 * step);
                let exact = cgf.gamma_prime(theta).unwrap();
                assert!(
                    ((fd - exact) / exact).abs() < 1e-5,
                    "{which:?} {theta}: {fd} {exact}"
                );
            }
        }
    }
}

#[test]
fn second_derivative_at_zero_is_clt_variance() {
    for p in zoo() {
        let e = 1e-5;
        for (which, var) in [
            (Which::Count, clt_var_n(&p).unwrap()),
            (Which::MarkSum, clt_var_l(&p).unwrap()),
        ] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let fd = (cgf.gamma_prime(e).unwrap() - cgf.gamma_prime(-e).unwrap()) / (2.0 * e);
            assert!(((fd - var) / var).abs() < 1e-4, "{which:?} {fd} {var}");
        }
    }
}

#[test]
fn slope_diverges_at_criticality() {
    for p in zoo() {
        for which in [Which::Count, Which::MarkSum] {
            let cgf = LimitCgf::new(&p, which).unwrap();
            let tc = cgf.critical().theta_c;
            let mut prev = 0.0;
            for k in 2..=6 {
                let d = cgf.gamma_prime(tc - 10f64.powi(-k)).unwrap();
                assert!(d > prev);
                prev = d;
            }
            assert!(prev > 50.0 * cgf.gamma_prime(0.0).unwrap());
        }
    }
}
