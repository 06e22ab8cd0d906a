//! Baseline selectors: the univariate filter and a three-step HIMA-style
//! pipeline (screen, LASSO, Bonferroni joint significance).

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{fit_univariate, DecisionSpec};
use crate::dist::t_two_sided_p;
use crate::error::{Error, Result};
use crate::numcore::{dot, mean, ols, pearson, Matrix};
use crate::rng::{derive_seed, stream};

/// Applies the decision to every column on its own, without conditioning.
pub fn filter_method(x: &[f64], m: &Matrix, y: &[f64], spec: &DecisionSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let n = m.nrows();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let keep: Vec<bool> = (0..m.ncols())
        .into_par_iter()
        .map(|j| crate::decision::decide(spec, x, m.col(j), y))
        .collect();
    Ok(keep
        .iter()
        .enumerate()
        .filter_map(|(j, k)| k.then_some(j))
        .collect())
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

pub const KKT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// Full coordinate sweeps performed.
    pub n_iterations: usize,
    pub converged: bool,
    /// Indices of nonzero coefficients.
    pub active_set: Vec<usize>,
    /// Largest violation of the optimality conditions.
    pub kkt_residual: f64,
}

/// LASSO by cyclic coordinate descent on
/// `(1/2n) ||y - X c||^2 + lambda ||c||_1`. No intercept is fitted.
pub fn lasso_cd(design: &Matrix, y: &[f64], lambda: f64, tol: f64, max_iter: usize) -> Result<LassoFit> {
    let weights = vec![1.0; design.ncols()];
    lasso_cd_weighted(design, y, lambda, &weights, tol, max_iter, None)
}

/// Coordinate descent with per-column penalty factors (`0` leaves a column
/// unpenalized) and an optional warm start.
pub fn lasso_cd_weighted(
    design: &Matrix,
    y: &[f64],
    lambda: f64,
    penalty: &[f64],
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<LassoFit> {
    let n = design.nrows();
    let k = design.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if penalty.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: penalty.len() });
    }
    if !(lambda >= 0.0) || penalty.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("lambda and penalty factors must be non-negative".into()));
    }
    if !design.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let nf = n as f64;
    let mut c = match warm {
        Some(w) if w.len() == k => w.to_vec(),
        Some(w) => return Err(Error::DimensionMismatch { expected: k, found: w.len() }),
        None => vec![0.0; k],
    };
    let scale: Vec<f64> = design.columns().map(|col| dot(col, col) / nf).collect();
    let mut r = y.to_vec();
    for (j, cj) in c.iter().enumerate() {
        if *cj != 0.0 {
            for (ri, xi) in r.iter_mut().zip(design.col(j)) {
                *ri -= cj * xi;
            }
        }
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            if scale[j] == 0.0 {
                c[j] = 0.0;
                continue;
            }
            let col = design.col(j);
            let z = dot(col, &r) / nf + scale[j] * c[j];
            let new = soft_threshold(z, lambda * penalty[j]) / scale[j];
            let delta = new - c[j];
            if delta != 0.0 {
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= delta * xi;
                }
                c[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }
    let kkt = kkt_residual(design, &r, &c, lambda, penalty);
    let fit = LassoFit {
        active_set: (0..k).filter(|&j| c[j] != 0.0).collect(),
        coefficients: c,
        lambda,
        n_iterations: iterations,
        converged,
        kkt_residual: kkt,
    };
    if converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged(Box::new(fit)))
    }
}

fn kkt_residual(design: &Matrix, r: &[f64], c: &[f64], lambda: f64, penalty: &[f64]) -> f64 {
    let nf = design.nrows() as f64;
    let mut worst: f64 = 0.0;
    for j in 0..design.ncols() {
        let g = dot(design.col(j), r) / nf;
        let bound = lambda * penalty[j];
        let v = if c[j] != 0.0 {
            (g - bound * c[j].signum()).abs()
        } else {
            (g.abs() - bound).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Largest optimality violation of `coefficients` for the given problem.
pub fn lasso_kkt_residual(design: &Matrix, y: &[f64], coefficients: &[f64], lambda: f64) -> f64 {
    let mut r = y.to_vec();
    for (j, cj) in coefficients.iter().enumerate() {
        for (ri, xi) in r.iter_mut().zip(design.col(j)) {
            *ri -= cj * xi;
        }
    }
    kkt_residual(design, &r, coefficients, lambda, &vec![1.0; design.ncols()])
}

const LASSO_TOL: f64 = 1e-7;
const LASSO_MAX_ITER: usize = 10_000;
const GRID_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HimaConfig {
    /// Mediators kept by the marginal screen; `None` uses `ceil(2n / ln n)`.
    pub screen_count: Option<usize>,
    pub alpha_level: f64,
    /// Strictly descending penalties; empty derives a log-spaced grid from
    /// the data.
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    /// Seed of the fold assignment.
    pub seed: u64,
}

impl Default for HimaConfig {
    fn default() -> Self {
        HimaConfig {
            screen_count: None,
            alpha_level: 0.1,
            lambda_grid: Vec::new(),
            cv_folds: 10,
            seed: 0,
        }
    }
}

impl HimaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::Config(format!(
                "alpha level must lie in (0, 1), got {}",
                self.alpha_level
            )));
        }
        if self.screen_count == Some(0) {
            return Err(Error::Config("screen count must be at least 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("at least two CV folds are required".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0))
            || self.lambda_grid.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::Config("lambda grid must be positive and strictly descending".into()));
        }
        Ok(())
    }
}

/// Default screen size `ceil(2n / ln n)`.
pub fn default_screen_count(n: usize) -> usize {
    (2.0 * n as f64 / (n as f64).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HimaResult {
    pub selected: Vec<usize>,
    /// Columns kept by the marginal screen, by descending |corr(M, y)|.
    pub screened: Vec<usize>,
    /// Screened columns with nonzero LASSO coefficient, ascending.
    pub survivors: Vec<usize>,
    pub lambda: f64,
    /// Joint-significance p-value (max of the two path tests) per survivor.
    pub p_values: Vec<f64>,
    /// Bonferroni-adjusted level applied to the survivors.
    pub adjusted_level: f64,
}

fn standardized_or_zero(v: &[f64]) -> Vec<f64> {
    let mu = mean(v);
    let centered: Vec<f64> = v.iter().map(|a| a - mu).collect();
    let sd = (dot(&centered, &centered) / (v.len() as f64 - 1.0)).sqrt();
    if sd > 0.0 && sd.is_finite() {
        centered.iter().map(|a| a / sd).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Screen, penalize, test.
pub fn hima(x: &[f64], m: &Matrix, y: &[f64], cfg: &HimaConfig) -> Result<HimaResult> {
    cfg.validate()?;
    let n = m.nrows();
    let p = m.ncols();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if n < 4 {
        return Err(Error::InsufficientData { n, required: 4 });
    }
    let d = match cfg.screen_count {
        Some(d) if d > p => {
            return Err(Error::Config(format!("screen count {d} exceeds the {p} mediators")));
        }
        Some(d) => d,
        None => default_screen_count(n).min(p),
    };
    let empty = |screened: Vec<usize>| HimaResult {
        selected: Vec::new(),
        screened,
        survivors: Vec::new(),
        lambda: f64::NAN,
        p_values: Vec::new(),
        adjusted_level: cfg.alpha_level,
    };
    if d == 0 {
        return Ok(empty(Vec::new()));
    }

    // Step 1: marginal screen on the M -> Y association.
    let scores: Vec<f64> = (0..p)
        .map(|j| pearson(m.col(j), y).map(f64::abs).unwrap_or(0.0))
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let screened: Vec<usize> = order[..d].to_vec();

    // Step 2: LASSO of y on (x, screened), x unpenalized.
    let mut cols = vec![standardized_or_zero(x)];
    cols.extend(screened.iter().map(|&j| standardized_or_zero(m.col(j))));
    let design = Matrix::from_columns(n, &cols)?;
    let ys = standardized_or_zero(y);
    let mut penalty = vec![1.0; d + 1];
    penalty[0] = 0.0;
    let grid = if cfg.lambda_grid.is_empty() {
        lambda_grid(&design, &ys, &penalty)
    } else {
        cfg.lambda_grid.clone()
    };
    let lambda = cross_validate(&design, &ys, &penalty, &grid, cfg.cv_folds, cfg.seed)?;
    let fit = lasso_path_fit(&design, &ys, &penalty, &grid, lambda);
    let mut survivors: Vec<usize> = (1..=d)
        .filter(|&k| fit[k] != 0.0)
        .map(|k| screened[k - 1])
        .collect();
    survivors.sort_unstable();
    if survivors.is_empty() {
        let mut res = empty(screened);
        res.lambda = lambda;
        return Ok(res);
    }

    // Step 3: joint significance with Bonferroni over survivors. Alpha from
    // m ~ 1 + x, beta from the refit y ~ 1 + x + survivors.
    let level = cfg.alpha_level / survivors.len() as f64;
    let mut refit_cols = vec![vec![1.0; n], x.to_vec()];
    refit_cols.extend(survivors.iter().map(|&j| m.col(j).to_vec()));
    let refit = Matrix::from_columns(n, &refit_cols).and_then(|dm| ols(&dm, y));
    let refit = match refit {
        Ok(f) => f,
        Err(e) => {
            log::warn!("HIMA outcome refit failed ({e}); no mediators selected");
            let mut res = empty(screened);
            res.survivors = survivors;
            res.lambda = lambda;
            res.adjusted_level = level;
            return Ok(res);
        }
    };
    let mut selected = Vec::new();
    let mut p_values = Vec::with_capacity(survivors.len());
    for (s, &j) in survivors.iter().enumerate() {
        let p_beta = path_p(refit.coefficients[2 + s], refit.standard_errors[2 + s], refit.dof);
        let p_alpha = match fit_univariate(x, m.col(j), y) {
            Ok(f) => path_p(f.alpha, f.se_alpha, f.dof_alpha),
            Err(e) => {
                log::debug!("HIMA alpha path for column {j} failed: {e}");
                1.0
            }
        };
        let pv = p_alpha.max(p_beta);
        p_values.push(pv);
        if p_alpha < level && p_beta < level {
            selected.push(j);
        }
    }
    Ok(HimaResult {
        selected,
        screened,
        survivors,
        lambda,
        p_values,
        adjusted_level: level,
    })
}

fn path_p(coef: f64, se: f64, dof: usize) -> f64 {
    if se > 0.0 && dof > 0 {
        t_two_sided_p(coef / se, dof as f64)
    } else {
        1.0
    }
}

/// Log-spaced descending grid from the smallest penalty that zeroes every
/// penalized coefficient.
fn lambda_grid(design: &Matrix, y: &[f64], penalty: &[f64]) -> Vec<f64> {
    let n = design.nrows();
    let unpen: Vec<usize> = (0..design.ncols()).filter(|&j| penalty[j] == 0.0).collect();
    let r = if unpen.is_empty() {
        y.to_vec()
    } else {
        crate::numcore::residualize(y, &design.select_columns(&unpen)).unwrap_or_else(|_| y.to_vec())
    };
    let max = (0..design.ncols())
        .filter(|&j| penalty[j] > 0.0)
        .map(|j| (dot(design.col(j), &r) / n as f64).abs() / penalty[j])
        .fold(0.0, f64::max);
    if !(max > 0.0) {
        return vec![1e-8];
    }
    let ratio: f64 = if n > design.ncols() { 1e-3 } else { 1e-2 };
    (0..GRID_SIZE)
        .map(|i| max * ratio.powf(i as f64 / (GRID_SIZE - 1) as f64))
        .collect()
}

/// Fits along `grid` with warm starts and returns the coefficients at
/// `target`.
fn lasso_path_fit(design: &Matrix, y: &[f64], penalty: &[f64], grid: &[f64], target: f64) -> Vec<f64> {
    let mut warm = vec![0.0; design.ncols()];
    for &lambda in grid {
        warm = solve_lenient(design, y, lambda, penalty, &warm);
        if lambda <= target {
            break;
        }
    }
    warm
}

fn solve_lenient(design: &Matrix, y: &[f64], lambda: f64, penalty: &[f64], warm: &[f64]) -> Vec<f64> {
    match lasso_cd_weighted(design, y, lambda, penalty, LASSO_TOL, LASSO_MAX_ITER, Some(warm)) {
        Ok(fit) => fit.coefficients,
        Err(Error::NotConverged(fit)) => {
            log::debug!("lasso at lambda {lambda} stopped after {} sweeps", fit.n_iterations);
            fit.coefficients
        }
        Err(e) => {
            log::debug!("lasso at lambda {lambda} failed: {e}");
            warm.to_vec()
        }
    }
}

/// Penalty from `grid` with the smallest mean held-out squared error; ties
/// go to the larger penalty.
fn cross_validate(
    design: &Matrix,
    y: &[f64],
    penalty: &[f64],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let n = design.nrows();
    let mut k = folds;
    if n < 2 * k {
        let reduced = (n / 2).max(2);
        log::warn!("{n} rows cannot fill {k} CV folds; using {reduced}");
        k = reduced;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(derive_seed(seed, 0x4849_4d41), 0));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    let errors: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| fold_errors(design, y, penalty, grid, &fold_of, f))
        .collect();
    let mut best = (f64::INFINITY, grid[0]);
    for (g, &lambda) in grid.iter().enumerate() {
        let total: f64 = errors.iter().map(|e| e[g]).sum::<f64>() / n as f64;
        if total < best.0 {
            best = (total, lambda);
        }
    }
    Ok(best.1)
}

/// Held-out squared-error sums along the grid for one fold. Training data
/// are re-centered with training means.
fn fold_errors(design: &Matrix, y: &[f64], penalty: &[f64], grid: &[f64], fold_of: &[usize], f: usize) -> Vec<f64> {
    let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != f).collect();
    let test: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == f).collect();
    let pick = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut train_cols = Vec::with_capacity(design.ncols());
    let mut test_cols = Vec::with_capacity(design.ncols());
    for col in design.columns() {
        let tr = pick(col, &train);
        let mu = mean(&tr);
        train_cols.push(tr.iter().map(|v| v - mu).collect::<Vec<_>>());
        test_cols.push(pick(col, &test).iter().map(|v| v - mu).collect::<Vec<_>>());
    }
    let ytr = pick(y, &train);
    let ymu = mean(&ytr);
    let ytr: Vec<f64> = ytr.iter().map(|v| v - ymu).collect();
    let yte: Vec<f64> = pick(y, &test).iter().map(|v| v - ymu).collect();
    let xtr = Matrix::from_columns(train.len(), &train_cols).expect("consistent fold sizes");
    let mut warm = vec![0.0; design.ncols()];
    grid.iter()
        .map(|&lambda| {
            warm = solve_lenient(&xtr, &ytr, lambda, penalty, &warm);
            (0..test.len())
                .map(|i| {
                    let pred: f64 = warm.iter().zip(&test_cols).map(|(c, col)| c * col[i]).sum();
                    (yte[i] - pred).powi(2)
                })
                .sum()
        })
        .collect()
}
