//! Helpers shared by the integration suites. The oracles here are written
//! independently of the library kernels: normal equations solved with
//! nalgebra's LU and distribution functions from statrs.

#![allow(dead_code)]

use medfilter::rng::{stream, Stream};
use medfilter::Matrix;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub mod suites;

pub fn gauss(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gauss_vec(n: usize, rng: &mut Stream) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

pub fn rng(seed: u64) -> Stream {
    stream(seed, 0)
}

/// Oracle least squares via the normal equations.
pub struct OracleFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dof: usize,
}

pub fn oracle_ols(columns: &[Vec<f64>], y: &[f64]) -> OracleFit {
    let n = y.len();
    let k = columns.len();
    let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let inv = xtx.clone().try_inverse().expect("oracle design is full rank");
    let c = xtx.lu().solve(&(x.transpose() * &yv)).expect("oracle solve");
    let r = &yv - &x * &c;
    let dof = n - k;
    let s2 = r.dot(&r) / dof as f64;
    OracleFit {
        coefficients: c.iter().copied().collect(),
        standard_errors: (0..k).map(|j| (s2 * inv[(j, j)]).sqrt()).collect(),
        residuals: r.iter().copied().collect(),
        dof,
    }
}

/// Residual of `v` on the given columns (no intercept added).
pub fn oracle_residualize(v: &[f64], columns: &[Vec<f64>]) -> Vec<f64> {
    if columns.is_empty() {
        return v.to_vec();
    }
    oracle_ols(columns, v).residuals
}

pub struct OracleMediation {
    pub alpha: f64,
    pub se_alpha: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub tau: f64,
    pub dof_alpha: usize,
    pub dof_beta: usize,
}

pub fn oracle_mediation(x: &[f64], m: &[f64], y: &[f64]) -> OracleMediation {
    let ones = vec![1.0; x.len()];
    let fm = oracle_ols(&[ones.clone(), x.to_vec()], m);
    let fy = oracle_ols(&[ones, x.to_vec(), m.to_vec()], y);
    OracleMediation {
        alpha: fm.coefficients[1],
        se_alpha: fm.standard_errors[1],
        beta: fy.coefficients[2],
        se_beta: fy.standard_errors[2],
        tau: fy.coefficients[1],
        dof_alpha: fm.dof,
        dof_beta: fy.dof,
    }
}

/// (z, two-sided p) of the first-order Sobel test.
pub fn oracle_sobel(f: &OracleMediation) -> (f64, f64) {
    let se = (f.beta.powi(2) * f.se_alpha.powi(2) + f.alpha.powi(2) * f.se_beta.powi(2)).sqrt();
    let z = f.alpha * f.beta / se;
    let p = 2.0 * Normal::new(0.0, 1.0).unwrap().sf(z.abs());
    (z, p)
}

pub fn oracle_t_p(t: f64, dof: usize) -> f64 {
    2.0 * StudentsT::new(0.0, 1.0, dof as f64).unwrap().sf(t.abs())
}

/// Sobel decision on `(x, m_p, y)` after residualizing all three on the
/// columns of `m` listed in `conditioning`.
pub fn oracle_conditional_sobel(x: &[f64], m: &Matrix, y: &[f64], p: usize, conditioning: &[usize], level: f64) -> bool {
    let cols: Vec<Vec<f64>> = conditioning.iter().map(|&j| m.col(j).to_vec()).collect();
    let rx = oracle_residualize(x, &cols);
    let rm = oracle_residualize(m.col(p), &cols);
    let ry = oracle_residualize(y, &cols);
    let f = oracle_mediation(&rx, &rm, &ry);
    oracle_sobel(&f).1 < level
}

pub fn standardized(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|a| (a - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    v.iter().map(|a| (a - mu) / sd).collect()
}

/// Sample correlation matrix of the columns of `data`.
pub fn oracle_correlation(data: &Matrix) -> Vec<Vec<f64>> {
    let k = data.ncols();
    let cols: Vec<Vec<f64>> = (0..k).map(|j| standardized(data.col(j))).collect();
    let n = data.nrows() as f64;
    (0..k)
        .map(|a| (0..k).map(|b| cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum::<f64>() / (n - 1.0)).collect())
        .collect()
}

/// Sample covariance matrix of the columns of `data`.
pub fn oracle_covariance(data: &Matrix) -> Vec<Vec<f64>> {
    let k = data.ncols();
    let n = data.nrows();
    let means: Vec<f64> = (0..k).map(|j| data.col(j).iter().sum::<f64>() / n as f64).collect();
    (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    (0..n).map(|i| (data.get(i, a) - means[a]) * (data.get(i, b) - means[b])).sum::<f64>()
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// Exact-correlation data for a fixture split into (x, M, y).
pub fn fixture_data(fixture: medfilter::Fixture, n: usize, seed: u64) -> (Vec<f64>, Matrix, Vec<f64>) {
    let target = medfilter::fixture_correlation(fixture);
    let data = medfilter::exact_correlation_sample(&target, n, &mut rng(seed)).unwrap();
    split(&data)
}

pub fn split(data: &Matrix) -> (Vec<f64>, Matrix, Vec<f64>) {
    let k = data.ncols();
    let mids: Vec<usize> = (1..k - 1).collect();
    (data.col(0).to_vec(), data.select_columns(&mids), data.col(k - 1).to_vec())
}
