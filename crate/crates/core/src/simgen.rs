//! Data generators for the controlled experiments.
//!
//! Every generated dataset has columns `[X, M_1 .. M_P, Y]` on the
//! correlation scale. Covariances come from verbatim fixture tables, from a
//! linear path model, or from a block recipe for the high-dimensional design.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::rng::{stream, Stream};

/// Eigenvalues in `[-PSD_CLIP, 0)` are clipped to zero in square-root factors.
pub const PSD_CLIP: f64 = 1e-10;
/// Implied covariances with an eigenvalue below `-NOT_PSD` are rejected.
pub const NOT_PSD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    Suppression,
    NoiseAlpha,
    NoiseBeta,
}

impl Fixture {
    pub const ALL: [Fixture; 3] = [Fixture::Suppression, Fixture::NoiseAlpha, Fixture::NoiseBeta];

    fn source(self) -> &'static str {
        match self {
            Fixture::Suppression => include_str!("../resources/table_a1.csv"),
            Fixture::NoiseAlpha => include_str!("../resources/table_a2.csv"),
            Fixture::NoiseBeta => include_str!("../resources/table_a3.csv"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Suppression => "suppression",
            Fixture::NoiseAlpha => "noise-alpha",
            Fixture::NoiseBeta => "noise-beta",
        }
    }

    /// Column labels of the table, `X`, `M1`, ..., `Y`.
    pub fn labels(self) -> Vec<String> {
        let header = self.source().lines().next().unwrap_or_default();
        header.split(',').map(|s| s.trim().to_string()).collect()
    }
}

impl std::str::FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fixture `{s}`")))
    }
}

fn decimals(entry: &str) -> usize {
    entry.split_once('.').map_or(0, |(_, frac)| frac.len())
}

/// The printed tables are rounded differently above and below the diagonal.
/// Each pair keeps the entry printed with more decimals, or their mean when
/// both have the same precision.
fn parse_symmetrized(src: &str) -> Matrix {
    let rows: Vec<Vec<&str>> = src
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::trim).collect())
        .collect();
    let k = rows.len();
    let mut out = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let a = rows[i][j];
            let b = rows[j][i];
            let va: f64 = a.parse().expect("fixture entries are numeric");
            let vb: f64 = b.parse().expect("fixture entries are numeric");
            let v = match decimals(a).cmp(&decimals(b)) {
                std::cmp::Ordering::Greater => va,
                std::cmp::Ordering::Less => vb,
                std::cmp::Ordering::Equal => 0.5 * (va + vb),
            };
            out.set(i, j, v);
        }
    }
    out
}

/// Marginal covariance matrix of a fixture, symmetrized.
pub fn fixture_covariance(fixture: Fixture) -> Matrix {
    parse_symmetrized(fixture.source())
}

/// Correlation matrix of a fixture.
pub fn fixture_correlation(fixture: Fixture) -> Matrix {
    cov2cor(&fixture_covariance(fixture)).expect("fixture variances are positive")
}

/// Rescales a covariance matrix to unit diagonal.
pub fn cov2cor(cov: &Matrix) -> Result<Matrix> {
    let k = cov.nrows();
    if !cov.is_square() {
        return Err(Error::DimensionMismatch { expected: k, found: cov.ncols() });
    }
    let sd: Vec<f64> = (0..k).map(|i| cov.get(i, i).sqrt()).collect();
    if let Some(i) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ZeroVarianceColumn(i));
    }
    let mut out = Matrix::zeros(k, k);
    for j in 0..k {
        for i in 0..k {
            let v = if i == j { 1.0 } else { cov.get(i, j) / (sd[i] * sd[j]) };
            out.set(i, j, v);
        }
    }
    Ok(out)
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.nrows(), m.ncols(), m.as_slice())
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::new(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("shape is consistent")
}

fn symmetric_eigen(m: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let a = to_na(m);
    SymmetricEigen::new((&a + a.transpose()) * 0.5)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetric_eigen(m).eigenvalues.min()
}

/// Symmetric square root `V diag(sqrt(l)) V'`, clipping tiny negative
/// eigenvalues.
pub fn sqrt_factor(m: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(m);
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if *v < -PSD_CLIP {
            return Err(Error::NotPsd { min_eigenvalue: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(from_na(&(v * DMatrix::from_diagonal(&d) * v.transpose())))
}

fn inverse_sqrt(m: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(m);
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if !(*v > 0.0) {
            return Err(Error::NotPsd { min_eigenvalue: *v });
        }
        *v = 1.0 / v.sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(from_na(&(v * DMatrix::from_diagonal(&d) * v.transpose())))
}

fn standard_normal_matrix(n: usize, k: usize, rng: &mut Stream) -> DMatrix<f64> {
    // Row by row so that a given row's draws do not depend on `n`.
    let mut z = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    z
}

/// A sample whose sample correlation matrix equals `target` exactly (up to
/// rounding): normal draws are centered, whitened to identity sample
/// covariance and colored with the square root of `target`.
pub fn exact_correlation_sample(target: &Matrix, n: usize, rng: &mut Stream) -> Result<Matrix> {
    let k = target.nrows();
    if !target.is_square() {
        return Err(Error::DimensionMismatch { expected: k, found: target.ncols() });
    }
    if n <= k + 1 {
        return Err(Error::SampleTooSmall { n, dim: k });
    }
    if let Some(i) = (0..k).find(|&i| (target.get(i, i) - 1.0).abs() > 1e-8) {
        return Err(Error::Config(format!(
            "target diagonal entry {i} is {}, expected 1",
            target.get(i, i)
        )));
    }
    let color = to_na(&sqrt_factor(target)?);
    let mut z = standard_normal_matrix(n, k, rng);
    for mut col in z.column_iter_mut() {
        let mu = col.mean();
        col.add_scalar_mut(-mu);
    }
    let s = (z.transpose() * &z) / (n as f64 - 1.0);
    let white = to_na(&inverse_sqrt(&from_na(&s))?);
    Ok(from_na(&(z * white * color)))
}

/// Linear path model `M = alpha X + e_M`, `Y = tau X + beta' M + e_Y` with
/// `var(X) = 1`, `cov(e_M) = residual_cov` and `var(e_Y) = y_residual_variance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathModel {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub residual_cov: Matrix,
    pub y_residual_variance: f64,
}

impl PathModel {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, tau: f64, residual_cov: Matrix, y_residual_variance: f64) -> Result<Self> {
        let model = PathModel {
            alpha,
            beta,
            tau,
            residual_cov,
            y_residual_variance,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.alpha.len();
        if self.beta.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: self.beta.len() });
        }
        if self.residual_cov.nrows() != p || self.residual_cov.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: self.residual_cov.nrows(),
            });
        }
        if !(self.y_residual_variance >= 0.0) {
            return Err(Error::Config("outcome residual variance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn n_mediators(&self) -> usize {
        self.alpha.len()
    }

    /// Two mediators with opposite exposure paths whose residual
    /// correlation cancels the marginal `M2`-`Y` covariance.
    pub fn suppression() -> Self {
        let resid = Matrix::from_rows(&[vec![0.84, -0.44], vec![-0.44, 0.84]]).expect("2x2");
        PathModel {
            alpha: vec![-0.4, 0.4],
            beta: vec![0.8, 0.48],
            tau: 0.0,
            residual_cov: resid,
            y_residual_variance: 3.5904,
        }
    }

    /// The suppression pair plus the exposure-related noise mediators of the
    /// noise-alpha table and the outcome-related noise mediators of the
    /// noise-beta table, each group with its own residual structure and no
    /// residual covariance across groups. The outcome residual variance is
    /// that of the suppression model.
    pub fn combined() -> Result<Self> {
        let supp = PathModel::suppression();
        let a2 = fixture_covariance(Fixture::NoiseAlpha);
        let a3 = fixture_covariance(Fixture::NoiseBeta);
        let noise: Vec<usize> = (2..17).collect();

        // Exposure-related noise: alpha = cov(X, N), residual = S_NN - aa'.
        let alpha_a: Vec<f64> = noise.iter().map(|&i| a2.get(0, i)).collect();
        let mut resid_a = a2.select_columns(&noise);
        resid_a = rows_of(&resid_a, &noise);
        for (r, ar) in alpha_a.iter().enumerate() {
            for (c, ac) in alpha_a.iter().enumerate() {
                resid_a.set(r, c, resid_a.get(r, c) - ar * ac);
            }
        }

        // Outcome-related noise: beta from regressing Y on (X, M) in the
        // noise-beta table; these mediators are unrelated to X.
        let pred: Vec<usize> = (0..17).collect();
        let s = to_na(&rows_of(&a3.select_columns(&pred), &pred));
        let c = nalgebra::DVector::from_iterator(17, pred.iter().map(|&i| a3.get(i, 17)));
        let b = s
            .clone()
            .cholesky()
            .ok_or(Error::NotPsd { min_eigenvalue: f64::NAN })?
            .solve(&c);
        let beta_b: Vec<f64> = noise.iter().map(|&i| b[i]).collect();
        let resid_b = rows_of(&a3.select_columns(&noise), &noise);

        let p = 2 + 2 * noise.len();
        let mut alpha = supp.alpha.clone();
        alpha.extend(&alpha_a);
        alpha.extend(std::iter::repeat_n(0.0, noise.len()));
        let mut beta = supp.beta.clone();
        beta.extend(std::iter::repeat_n(0.0, noise.len()));
        beta.extend(&beta_b);
        let mut resid = Matrix::zeros(p, p);
        let blocks = [(0, &supp.residual_cov), (2, &resid_a), (2 + noise.len(), &resid_b)];
        for (off, blk) in blocks {
            for r in 0..blk.nrows() {
                for c in 0..blk.ncols() {
                    resid.set(off + r, off + c, blk.get(r, c));
                }
            }
        }
        PathModel::new(alpha, beta, 0.0, resid, supp.y_residual_variance)
    }

    /// Covariance of `(X, M, Y)` on the model's own scale.
    pub fn covariance(&self) -> Matrix {
        let p = self.n_mediators();
        let k = p + 2;
        let mut s_mm = self.residual_cov.clone();
        for i in 0..p {
            for j in 0..p {
                s_mm.set(i, j, s_mm.get(i, j) + self.alpha[i] * self.alpha[j]);
            }
        }
        let s_mm_beta: Vec<f64> = (0..p)
            .map(|i| (0..p).map(|j| s_mm.get(i, j) * self.beta[j]).sum())
            .collect();
        let ab: f64 = self.alpha.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        let b_s_b: f64 = self.beta.iter().zip(&s_mm_beta).map(|(b, v)| b * v).sum();
        let mut out = Matrix::zeros(k, k);
        out.set(0, 0, 1.0);
        for i in 0..p {
            out.set(0, i + 1, self.alpha[i]);
            out.set(i + 1, 0, self.alpha[i]);
            for j in 0..p {
                out.set(i + 1, j + 1, s_mm.get(i, j));
            }
            let my = s_mm_beta[i] + self.alpha[i] * self.tau;
            out.set(i + 1, k - 1, my);
            out.set(k - 1, i + 1, my);
        }
        let xy = self.tau + ab;
        out.set(0, k - 1, xy);
        out.set(k - 1, 0, xy);
        let vy = self.tau * self.tau + 2.0 * self.tau * ab + b_s_b + self.y_residual_variance;
        out.set(k - 1, k - 1, vy);
        out
    }
}

fn rows_of(m: &Matrix, rows: &[usize]) -> Matrix {
    m.transpose().select_columns(rows).transpose()
}

/// Model-implied correlation matrix of `(X, M, Y)`.
pub fn implied_covariance(paths: &PathModel) -> Result<Matrix> {
    paths.validate()?;
    let cov = paths.covariance();
    let min = min_eigenvalue(&cov);
    if min < -NOT_PSD {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    cov2cor(&cov)
}

/// The four-block high-dimensional design: true mediators (`M`, related to
/// X and Y), exposure-related noise (`A`), outcome-related noise (`B`) and
/// independent noise (`I`). Every mediator has unit variance. Residual
/// correlation, if any, stays within a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockSpec {
    pub n_true: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_i: usize,
    pub alpha_m: f64,
    pub beta_m: f64,
    pub alpha_a: f64,
    pub beta_b: f64,
    pub tau: f64,
    /// Residual equicorrelation inside each of the M, A and B blocks.
    pub within_corr: f64,
    pub y_residual_variance: f64,
}

impl Default for BlockSpec {
    fn default() -> Self {
        BlockSpec {
            n_true: 50,
            n_a: 50,
            n_b: 50,
            n_i: 850,
            alpha_m: 0.5,
            beta_m: 0.5,
            alpha_a: 0.5,
            beta_b: 0.5,
            tau: 0.0,
            within_corr: 0.0,
            y_residual_variance: 1.0,
        }
    }
}

impl BlockSpec {
    pub fn with_sizes(n_true: usize, n_a: usize, n_b: usize, n_i: usize) -> Self {
        BlockSpec {
            n_true,
            n_a,
            n_b,
            n_i,
            ..BlockSpec::default()
        }
    }

    pub fn n_mediators(&self) -> usize {
        self.n_true + self.n_a + self.n_b + self.n_i
    }

    /// `(size, alpha, beta, residual equicorrelation)` per block in column order.
    fn blocks(&self) -> [(usize, f64, f64, f64); 4] {
        [
            (self.n_true, self.alpha_m, self.beta_m, self.within_corr),
            (self.n_a, self.alpha_a, 0.0, self.within_corr),
            (self.n_b, 0.0, self.beta_b, self.within_corr),
            (self.n_i, 0.0, 0.0, 0.0),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (size, alpha, _, rho) in self.blocks() {
            if size == 0 {
                continue;
            }
            if !(alpha.abs() <= 1.0) {
                return Err(Error::NotPsd { min_eigenvalue: 1.0 - alpha * alpha });
            }
            // Equicorrelation is PSD for -1/(k-1) <= rho <= 1.
            let lower = if size > 1 { -1.0 / (size as f64 - 1.0) } else { -1.0 };
            if rho > 1.0 || rho < lower {
                return Err(Error::NotPsd { min_eigenvalue: (1.0 - rho).min(1.0 + (size as f64 - 1.0) * rho) });
            }
        }
        if !(self.y_residual_variance >= 0.0) {
            return Err(Error::Config("outcome residual variance must be non-negative".into()));
        }
        Ok(())
    }

    /// The same design as a dense path model.
    pub fn path_model(&self) -> PathModel {
        let p = self.n_mediators();
        let mut alpha = Vec::with_capacity(p);
        let mut beta = Vec::with_capacity(p);
        let mut resid = Matrix::zeros(p, p);
        let mut off = 0;
        for (size, a, b, rho) in self.blocks() {
            let var = 1.0 - a * a;
            for r in 0..size {
                alpha.push(a);
                beta.push(b);
                for c in 0..size {
                    let v = if r == c { var } else { rho * var };
                    resid.set(off + r, off + c, v);
                }
            }
            off += size;
        }
        PathModel {
            alpha,
            beta,
            tau: self.tau,
            residual_cov: resid,
            y_residual_variance: self.y_residual_variance,
        }
    }

    /// Population variance of Y before rescaling.
    fn y_variance(&self) -> f64 {
        let mut x_coef = self.tau;
        let mut resid = 0.0;
        for (size, a, b, rho) in self.blocks() {
            let k = size as f64;
            x_coef += k * a * b;
            let var = 1.0 - a * a;
            resid += var * ((1.0 - rho) * k * b * b + rho * (k * b).powi(2));
        }
        x_coef * x_coef + resid + self.y_residual_variance
    }
}

/// Builds and checks the block design.
pub fn block_highdim_cov(spec: &BlockSpec) -> Result<CovarianceSpec> {
    spec.validate()?;
    Ok(CovarianceSpec::BlockHighDim(spec.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovarianceSpec {
    /// A correlation or covariance matrix over `(X, M, Y)`.
    ExplicitMatrix { matrix: Matrix },
    Fixture { fixture: Fixture },
    PathModel(PathModel),
    BlockHighDim(BlockSpec),
}

impl CovarianceSpec {
    pub fn n_mediators(&self) -> usize {
        match self {
            CovarianceSpec::ExplicitMatrix { matrix } => matrix.nrows().saturating_sub(2),
            CovarianceSpec::Fixture { fixture } => fixture_covariance(*fixture).nrows() - 2,
            CovarianceSpec::PathModel(p) => p.n_mediators(),
            CovarianceSpec::BlockHighDim(b) => b.n_mediators(),
        }
    }

    /// Dense correlation matrix of `(X, M, Y)`.
    pub fn correlation(&self) -> Result<Matrix> {
        match self {
            CovarianceSpec::ExplicitMatrix { matrix } => {
                let min = min_eigenvalue(matrix);
                if min < -NOT_PSD {
                    return Err(Error::NotPsd { min_eigenvalue: min });
                }
                cov2cor(matrix)
            }
            CovarianceSpec::Fixture { fixture } => Ok(fixture_correlation(*fixture)),
            CovarianceSpec::PathModel(p) => implied_covariance(p),
            CovarianceSpec::BlockHighDim(b) => {
                b.validate()?;
                implied_covariance(&b.path_model())
            }
        }
    }
}

/// Multivariate normal sample of `(X, M, Y)` on the correlation scale. The
/// block design is sampled structurally, one block at a time.
pub fn mvn_sample(cov: &CovarianceSpec, n: usize, rng: &mut Stream) -> Result<Matrix> {
    match cov {
        CovarianceSpec::BlockHighDim(spec) => block_sample(spec, n, rng),
        other => {
            let corr = other.correlation()?;
            let color = to_na(&sqrt_factor(&corr)?);
            let z = standard_normal_matrix(n, corr.nrows(), rng);
            Ok(from_na(&(z * color)))
        }
    }
}

fn block_sample(spec: &BlockSpec, n: usize, rng: &mut Stream) -> Result<Matrix> {
    spec.validate()?;
    let p = spec.n_mediators();
    let k = p + 2;
    let y_sd = spec.y_variance().sqrt();
    let e_sd = spec.y_residual_variance.sqrt();
    let mut out = Matrix::zeros(n, k);
    let blocks = spec.blocks();
    for i in 0..n {
        let x: f64 = StandardNormal.sample(rng);
        out.set(i, 0, x);
        let mut y = spec.tau * x;
        let mut col = 1;
        for (size, a, b, rho) in blocks {
            if size == 0 {
                continue;
            }
            let resid_sd = (1.0 - a * a).sqrt();
            let common: f64 = if rho != 0.0 { StandardNormal.sample(rng) } else { 0.0 };
            let (w_common, w_own) = (rho.max(0.0).sqrt(), (1.0 - rho.max(0.0)).sqrt());
            for _ in 0..size {
                let own: f64 = StandardNormal.sample(rng);
                let e = resid_sd * (w_common * common + w_own * own);
                let m = a * x + e;
                out.set(i, col, m);
                y += b * m;
                col += 1;
            }
        }
        let ey: f64 = StandardNormal.sample(rng);
        out.set(i, k - 1, (y + e_sd * ey) / y_sd);
    }
    Ok(out)
}

/// A named data-generating condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    pub name: String,
    pub cov: CovarianceSpec,
    /// Inclusive sample-size range; each replicate draws uniformly from it.
    pub n_range: (usize, usize),
    pub n_reps: usize,
    /// 0-based mediator indices of the true mediators.
    pub true_mediators: Vec<usize>,
    pub exact_correlation: bool,
}

/// One generated replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub x: Vec<f64>,
    pub m: Matrix,
    pub y: Vec<f64>,
}

pub const SHIPPED_CONDITIONS: [&str; 5] = ["suppression", "noise-alpha", "noise-beta", "combined", "highdim"];

impl SimCondition {
    pub fn shipped(name: &str) -> Result<Self> {
        let theoretical = |name: &str, cov: CovarianceSpec, truth: Vec<usize>| SimCondition {
            name: name.to_string(),
            cov,
            n_range: (400, 600),
            n_reps: 100,
            true_mediators: truth,
            exact_correlation: true,
        };
        Ok(match name {
            "suppression" => theoretical(
                name,
                CovarianceSpec::Fixture { fixture: Fixture::Suppression },
                vec![0, 1],
            ),
            "noise-alpha" => theoretical(name, CovarianceSpec::Fixture { fixture: Fixture::NoiseAlpha }, vec![0]),
            "noise-beta" => theoretical(name, CovarianceSpec::Fixture { fixture: Fixture::NoiseBeta }, vec![0]),
            "combined" => theoretical(name, CovarianceSpec::PathModel(PathModel::combined()?), vec![0, 1]),
            "highdim" => {
                let spec = BlockSpec::default();
                SimCondition {
                    name: name.to_string(),
                    true_mediators: (0..spec.n_true).collect(),
                    cov: block_highdim_cov(&spec)?,
                    n_range: (100, 100),
                    n_reps: 100,
                    exact_correlation: false,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown condition `{other}`; available: {}",
                    SHIPPED_CONDITIONS.join(", ")
                )))
            }
        })
    }

    pub fn n_mediators(&self) -> usize {
        self.cov.n_mediators()
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_range;
        if lo > hi || lo < 4 {
            return Err(Error::Config(format!("invalid sample-size range ({lo}, {hi})")));
        }
        let p = self.n_mediators();
        if let Some(t) = self.true_mediators.iter().find(|&&t| t >= p) {
            return Err(Error::Config(format!("true mediator {t} out of range for {p} mediators")));
        }
        Ok(())
    }

    /// Dense correlation matrix for exact-correlation sampling, if used.
    pub fn target(&self) -> Result<Option<Matrix>> {
        if self.exact_correlation {
            self.cov.correlation().map(Some)
        } else {
            Ok(None)
        }
    }

    /// Draws replicate `rep` under `seed`. `target` is the result of
    /// [`SimCondition::target`], passed in so it is computed once.
    pub fn generate(&self, target: Option<&Matrix>, seed: u64, rep: u64) -> Result<SimData> {
        let mut rng = stream(seed, rep);
        let (lo, hi) = self.n_range;
        let n = rng.random_range(lo..=hi);
        let data = match target {
            Some(t) => exact_correlation_sample(t, n, &mut rng)?,
            None => mvn_sample(&self.cov, n, &mut rng)?,
        };
        let k = data.ncols();
        let mids: Vec<usize> = (1..k - 1).collect();
        Ok(SimData {
            x: data.col(0).to_vec(),
            m: data.select_columns(&mids),
            y: data.col(k - 1).to_vec(),
        })
    }
}
