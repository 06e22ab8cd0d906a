//! The oracle suites as plain functions that panic on the first mismatch,
//! shared by the oracle tests and the acceptance run.

#![allow(clippy::needless_range_loop)]

use super::*;
use medfilter::baselines::lasso_cd;
use medfilter::cmf::{cmf_inner, DecisionVector, InnerParams};
use medfilter::numcore::ols;
use medfilter::{
    exact_correlation_sample, fit_univariate, fixture_correlation, joint_significance_test, soft_threshold,
    sobel_test, DecisionSpec, Fixture, Matrix,
};
use nalgebra::DMatrix;
use rand::Rng;

/// A small mediation dataset with random paths and correlated mediators.
fn small_case(case: u64) -> (Vec<f64>, Matrix, Vec<f64>) {
    let mut r = rng(1000 + case);
    let p = 1 + (case % 3) as usize;
    let n = r.random_range(30..=200);
    let x = gauss_vec(n, &mut r);
    let shared = gauss_vec(n, &mut r);
    let mut cols = Vec::new();
    let mut y: Vec<f64> = x.iter().map(|v| r.random_range(-0.3..0.3) * v).collect();
    for _ in 0..p {
        let a = if r.random_bool(0.7) { r.random_range(-0.8..0.8) } else { 0.0 };
        let b = if r.random_bool(0.7) { r.random_range(-0.8..0.8) } else { 0.0 };
        let s = r.random_range(-0.6..0.6);
        let m: Vec<f64> = (0..n).map(|i| a * x[i] + s * shared[i] + gauss(&mut r)).collect();
        for i in 0..n {
            y[i] += b * m[i];
        }
        cols.push(m);
    }
    for v in y.iter_mut() {
        *v += gauss(&mut r);
    }
    let m = Matrix::from_columns(n, &cols.iter().map(|c| standardized(c)).collect::<Vec<_>>()).unwrap();
    (standardized(&x), m, standardized(&y))
}

fn is_fixed_point(x: &[f64], m: &Matrix, y: &[f64], bits: &[bool], level: f64) -> bool {
    (0..bits.len()).all(|p| {
        let cond: Vec<usize> = (0..bits.len()).filter(|&j| j != p && bits[j]).collect();
        oracle_conditional_sobel(x, m, y, p, &cond, level) == bits[p]
    })
}

pub fn cmf_inner_reaches_an_exhaustive_fixed_point() {
    let spec = DecisionSpec::default();
    let mut unique = 0;
    for case in 0..50 {
        let (x, m, y) = small_case(case);
        let p = m.ncols();
        let all: Vec<Vec<bool>> = (0..1u32 << p).map(|mask| (0..p).map(|j| mask >> j & 1 == 1).collect()).collect();
        let fixed: Vec<&Vec<bool>> = all.iter().filter(|b| is_fixed_point(&x, &m, &y, b, spec.alpha_level)).collect();
        assert!(!fixed.is_empty(), "case {case}: corpus dataset has no fixed point");
        if fixed.len() == 1 {
            unique += 1;
        }
        for (s, start) in all.iter().enumerate() {
            let mut r = rng(case * 16 + s as u64);
            let out = cmf_inner(
                &x,
                &m,
                &y,
                &spec,
                &DecisionVector::from_bits(start.clone()),
                &InnerParams::exhaustive(50),
                &mut r,
            )
            .unwrap();
            assert!(out.converged, "case {case}, start {start:?}: no convergence");
            assert!(
                fixed.contains(&&out.vector.bits),
                "case {case}, start {start:?}: {:?} is not among the fixed points {fixed:?}",
                out.vector.bits
            );
            if fixed.len() == 1 {
                assert_eq!(&out.vector.bits, fixed[0]);
            }
        }
    }
    assert!(unique >= 25, "corpus should mostly have a single fixed point, got {unique}");
}

fn oracle_kkt(design: &Matrix, y: &[f64], c: &[f64], lambda: f64) -> f64 {
    let n = design.nrows();
    let r: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..design.ncols()).map(|j| design.get(i, j) * c[j]).sum::<f64>())
        .collect();
    (0..design.ncols())
        .map(|j| {
            let g = design.col(j).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            if c[j] != 0.0 {
                (g - lambda * c[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn lasso_satisfies_kkt_on_random_instances() {
    for case in 0..100u64 {
        let mut r = rng(5000 + case);
        let n = r.random_range(20..=100);
        let p = r.random_range(2..=60);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| standardized(&gauss_vec(n, &mut r))).collect();
        let design = Matrix::from_columns(n, &cols).unwrap();
        let truth: Vec<f64> = (0..p).map(|j| if j < 3 { r.random_range(-1.0..1.0) } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (0..p).map(|j| design.get(i, j) * truth[j]).sum::<f64>() + gauss(&mut r))
            .collect();
        let lambda_max = cols
            .iter()
            .map(|c| (c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64).abs())
            .fold(0.0, f64::max);
        let lambda = lambda_max * r.random_range(0.05..1.1);
        let fit = lasso_cd(&design, &y, lambda, 1e-12, 200_000).unwrap();
        let kkt = oracle_kkt(&design, &y, &fit.coefficients, lambda);
        assert!(kkt <= 1e-6, "case {case}: KKT residual {kkt}");
    }
}

pub fn lasso_matches_orthonormal_closed_form() {
    for case in 0..20u64 {
        let mut r = rng(7000 + case);
        let n = r.random_range(30..=80);
        let p = r.random_range(1..=n / 2);
        let raw = DMatrix::from_fn(n, p, |_, _| gauss(&mut r));
        let q = raw.qr().q();
        let scale = (n as f64).sqrt();
        let cols: Vec<Vec<f64>> = (0..p).map(|j| q.column(j).iter().map(|v| v * scale).collect()).collect();
        let design = Matrix::from_columns(n, &cols).unwrap();
        let y = gauss_vec(n, &mut r);
        let lambda = r.random_range(0.0..0.3);
        let fit = lasso_cd(&design, &y, lambda, 1e-13, 10_000).unwrap();
        for j in 0..p {
            let z = cols[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let expected = if z > lambda {
                z - lambda
            } else if z < -lambda {
                z + lambda
            } else {
                0.0
            };
            assert!((fit.coefficients[j] - expected).abs() < 1e-8, "case {case}, column {j}");
            assert!((soft_threshold(z, lambda) - expected).abs() < 1e-15);
        }
    }
}

pub fn exact_correlation_sample_reproduces_fixtures() {
    for (i, fixture) in Fixture::ALL.into_iter().enumerate() {
        let target = fixture_correlation(fixture);
        for (k, n) in [400usize, 500, 600].into_iter().enumerate() {
            let data = exact_correlation_sample(&target, n, &mut rng(100 * i as u64 + k as u64)).unwrap();
            let got = oracle_correlation(&data);
            for a in 0..target.nrows() {
                for b in 0..target.ncols() {
                    assert!(
                        (got[a][b] - target.get(a, b)).abs() < 1e-8,
                        "{fixture:?} n={n} entry ({a},{b}): {} vs {}",
                        got[a][b],
                        target.get(a, b)
                    );
                }
                let col = data.col(a);
                let mu = col.iter().sum::<f64>() / n as f64;
                let sd = (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
                assert!(mu.abs() < 1e-8 && (sd - 1.0).abs() < 1e-8);
            }
        }
    }
}

pub fn regression_and_tests_match_oracles() {
    for case in 0..20u64 {
        let mut r = rng(9000 + case);
        let n = r.random_range(8..=60);
        let x = gauss_vec(n, &mut r);
        let a = r.random_range(-1.0..1.0);
        let b = r.random_range(-1.0..1.0);
        let m: Vec<f64> = x.iter().map(|v| a * v + gauss(&mut r)).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.2 * x[i] + b * m[i] + gauss(&mut r)).collect();

        let fit = fit_univariate(&x, &m, &y).unwrap();
        let o = oracle_mediation(&x, &m, &y);
        let close = |u: f64, v: f64, what: &str| assert!((u - v).abs() < 1e-8, "case {case}: {what} {u} vs {v}");
        close(fit.alpha, o.alpha, "alpha");
        close(fit.se_alpha, o.se_alpha, "se_alpha");
        close(fit.beta, o.beta, "beta");
        close(fit.se_beta, o.se_beta, "se_beta");
        close(fit.tau, o.tau, "tau");
        assert_eq!((fit.dof_alpha, fit.dof_beta), (o.dof_alpha, o.dof_beta));

        let sobel = sobel_test(&fit, 0.1).unwrap();
        let (z, p) = oracle_sobel(&o);
        close(sobel.statistic, z, "sobel z");
        close(sobel.p_value, p, "sobel p");
        assert_eq!(sobel.decided, p < 0.1);

        let joint = joint_significance_test(&fit, 0.1).unwrap();
        let pa = oracle_t_p(o.alpha / o.se_alpha, o.dof_alpha);
        let pb = oracle_t_p(o.beta / o.se_beta, o.dof_beta);
        close(joint.p_value, pa.max(pb), "joint p");
        assert_eq!(joint.decided, pa < 0.1 && pb < 0.1);

        // A wider design through the general solver.
        let k = 1 + (case % 4) as usize;
        let mut cols = vec![vec![1.0; n.max(k + 3)]];
        let rows = cols[0].len();
        for _ in 0..k {
            cols.push(gauss_vec(rows, &mut r));
        }
        let target = gauss_vec(rows, &mut r);
        let design = Matrix::from_columns(rows, &cols).unwrap();
        let lib = ols(&design, &target).unwrap();
        let ora = oracle_ols(&cols, &target);
        for j in 0..=k {
            close(lib.coefficients[j], ora.coefficients[j], "coefficient");
            close(lib.standard_errors[j], ora.standard_errors[j], "standard error");
            close(
                oracle_t_p(lib.t_statistic(j), lib.dof),
                oracle_t_p(ora.coefficients[j] / ora.standard_errors[j], ora.dof),
                "t p-value",
            );
        }
    }
}
