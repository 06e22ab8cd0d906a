//! Preparation of observational data: confounder adjustment and the
//! univariate pre-screen used before running a selector on very wide data.

use crate::error::{Error, Result};
use crate::numcore::{norm, pearson, Matrix, OrthoBasis, PIVOT_TOLERANCE};

/// Exposure, candidate mediators and outcome of one study.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub m: Matrix,
    pub y: Vec<f64>,
    pub mediator_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, m: Matrix, y: Vec<f64>, mediator_names: Vec<String>) -> Result<Self> {
        let n = m.nrows();
        for len in [x.len(), y.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        if mediator_names.len() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.ncols(),
                found: mediator_names.len(),
            });
        }
        Ok(Dataset { x, m, y, mediator_names })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_mediators(&self) -> usize {
        self.m.ncols()
    }
}

/// Replaces `x`, `y` and every mediator by its residual on an intercept plus
/// `covariates`. With no covariate columns this just centers.
pub fn residualize_covariates(data: &Dataset, covariates: &Matrix) -> Result<Dataset> {
    let n = data.n();
    if covariates.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: covariates.nrows(),
        });
    }
    if !covariates.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let design = covariates.with_intercept();
    if design.ncols() >= n {
        return Err(Error::InsufficientData { n, required: design.ncols() + 1 });
    }
    let basis = OrthoBasis::new(&design);
    if !basis.dropped().is_empty() {
        return Err(Error::RankDeficient);
    }
    // A column explained by the covariates leaves only rounding noise; zero
    // it so that later steps see it as constant.
    let project = |v: &[f64]| {
        let mut r = v.to_vec();
        basis.project_out(&mut r);
        if norm(&r) <= PIVOT_TOLERANCE * norm(v) {
            r.iter_mut().for_each(|a| *a = 0.0);
        }
        r
    };
    let cols: Vec<Vec<f64>> = data.m.columns().map(project).collect();
    Ok(Dataset {
        x: project(&data.x),
        y: project(&data.y),
        m: Matrix::from_columns(n, &cols)?,
        mediator_names: data.mediator_names.clone(),
    })
}

/// Keeps the `k` mediators with the largest `|corr(x, m) * corr(m, y)|`,
/// ties by ascending index, in their original order. Also returns the
/// original index of each kept column. Constant mediators score 0.
pub fn prefilter_topk(data: &Dataset, k: usize) -> Result<(Dataset, Vec<usize>)> {
    let p = data.n_mediators();
    if k == 0 || k > p {
        return Err(Error::Config(format!("prefilter size {k} must lie in 1..={p}")));
    }
    let scores: Vec<f64> = data
        .m
        .columns()
        .map(|c| match (pearson(&data.x, c), pearson(c, &data.y)) {
            (Ok(a), Ok(b)) => (a * b).abs(),
            _ => 0.0,
        })
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    let reduced = Dataset {
        x: data.x.clone(),
        y: data.y.clone(),
        m: data.m.select_columns(&kept),
        mediator_names: kept.iter().map(|&j| data.mediator_names[j].clone()).collect(),
    };
    Ok((reduced, kept))
}
