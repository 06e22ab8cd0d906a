//! Dense numerical kernels: standardization, least squares, projections and
//! correlations.
//!
//! Everything here is a pure function of its inputs. Projections go through a
//! column-pivoted Gram-Schmidt factorization ([`OrthoBasis`]) instead of
//! forming `(A'A)^{-1}`; columns whose remaining norm falls below
//! [`PIVOT_TOLERANCE`] times the largest column norm are treated as linearly
//! dependent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot tolerance for rank decisions.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Dense column-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps column-major `data` of length `nrows * ncols`.
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                found: data.len(),
            });
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from equal-length columns. `nrows` is needed so that a
    /// matrix with zero columns still knows its height.
    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for c in columns {
            if c.len() != nrows {
                return Err(Error::DimensionMismatch {
                    expected: nrows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            nrows,
            ncols: columns.len(),
            data,
        })
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: r.len(),
                });
            }
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let n = self.nrows;
        &mut self.data[j * n..(j + 1) * n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.ncols).map(move |j| self.col(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.nrows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            nrows: self.nrows,
            ncols: idx.len(),
            data,
        }
    }

    pub fn push_column(&mut self, c: &[f64]) -> Result<()> {
        if c.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: c.len(),
            });
        }
        self.data.extend_from_slice(c);
        self.ncols += 1;
        Ok(())
    }

    /// A copy with a leading column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let mut data = vec![1.0; self.nrows];
        data.extend_from_slice(&self.data);
        Matrix {
            nrows: self.nrows,
            ncols: self.ncols + 1,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Largest absolute elementwise difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sample correlation matrix of the columns.
    pub fn correlation(&self) -> Result<Matrix> {
        let z = standardize(self)?;
        let k = z.ncols();
        let denom = (z.nrows() - 1) as f64;
        let mut c = Matrix::zeros(k, k);
        for a in 0..k {
            c.set(a, a, 1.0);
            for b in 0..a {
                let v = dot(z.col(a), z.col(b)) / denom;
                c.set(a, b, v);
                c.set(b, a, v);
            }
        }
        Ok(c)
    }

    /// Sample covariance matrix of the columns (denominator `n - 1`).
    pub fn covariance(&self) -> Result<Matrix> {
        let n = self.nrows;
        if n < 2 {
            return Err(Error::InsufficientData { n, required: 2 });
        }
        let k = self.ncols;
        let centered: Vec<Vec<f64>> = self
            .columns()
            .map(|c| {
                let m = mean(c);
                c.iter().map(|v| v - m).collect()
            })
            .collect();
        let mut s = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let v = dot(&centered[a], &centered[b]) / (n - 1) as f64;
                s.set(a, b, v);
                s.set(b, a, v);
            }
        }
        Ok(s)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with denominator `n - 1`.
pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() as f64 - 1.0)).sqrt()
}

/// Scale-aware check for a constant vector; rounding in the mean can leave a
/// sd of a few ulps on data that is constant.
fn is_constant(v: &[f64], sd: f64) -> bool {
    let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    sd <= 64.0 * f64::EPSILON * scale
}

pub(crate) fn is_constant_vec(v: &[f64]) -> bool {
    is_constant(v, sample_sd(v))
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

/// Centers and scales a single vector to mean 0 and sd 1.
pub fn standardize_vec(v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v)?;
    if v.len() < 2 {
        return Err(Error::InsufficientData {
            n: v.len(),
            required: 2,
        });
    }
    let m = mean(v);
    let sd = sample_sd(v);
    if is_constant(v, sd) {
        return Err(Error::ZeroVarianceColumn(0));
    }
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}

/// Centers every column and scales it to unit sample standard deviation.
pub fn standardize(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if m.nrows() < 2 {
        return Err(Error::InsufficientData {
            n: m.nrows(),
            required: 2,
        });
    }
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let c = m.col(j);
        let mu = mean(c);
        let sd = sample_sd(c);
        if is_constant(c, sd) {
            return Err(Error::ZeroVarianceColumn(j));
        }
        for (o, v) in out.col_mut(j).iter_mut().zip(c) {
            *o = (v - mu) / sd;
        }
    }
    Ok(out)
}

/// Pearson correlation of two vectors.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            n: a.len(),
            required: 2,
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let n1 = (a.len() - 1) as f64;
    if is_constant(a, (saa / n1).sqrt()) {
        return Err(Error::ZeroVarianceColumn(0));
    }
    if is_constant(b, (sbb / n1).sqrt()) {
        return Err(Error::ZeroVarianceColumn(1));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Orthonormal basis for the column space of a matrix, computed by
/// column-pivoted modified Gram-Schmidt with one reorthogonalization pass.
///
/// `pivots[s]` is the source column behind basis vector `s`; columns that fall
/// below the pivot tolerance end up in `dropped`.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    n: usize,
    q: Vec<f64>,
    /// Upper-triangular factor in pivot order, row-major `rank x rank`.
    r: Vec<f64>,
    pivots: Vec<usize>,
    dropped: Vec<usize>,
}

impl OrthoBasis {
    pub fn new(a: &Matrix) -> Self {
        let n = a.nrows();
        let k = a.ncols();
        let mut work: Vec<Vec<f64>> = a.columns().map(<[f64]>::to_vec).collect();
        let max_norm = work.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let tol = PIVOT_TOLERANCE * max_norm;
        // rfull[s][j]: coefficient of basis s in original column j.
        let mut rfull: Vec<Vec<f64>> = Vec::new();
        let mut q: Vec<f64> = Vec::with_capacity(n * k);
        let mut pivots = Vec::with_capacity(k);
        let mut remaining: Vec<usize> = (0..k).collect();
        let mut norms: Vec<f64> = work.iter().map(|c| norm(c)).collect();

        while !remaining.is_empty() && max_norm > 0.0 {
            let (pos, &j) = remaining
                .iter()
                .enumerate()
                .max_by(|(_, &a), (_, &b)| norms[a].total_cmp(&norms[b]).then(b.cmp(&a)))
                .expect("nonempty");
            if norms[j] <= tol {
                break;
            }
            // Second Gram-Schmidt pass against the basis built so far.
            let s = pivots.len();
            for (i, ri) in rfull.iter_mut().enumerate() {
                let qi = &q[i * n..(i + 1) * n];
                let c = dot(qi, &work[j]);
                axpy(-c, qi, &mut work[j]);
                ri[j] += c;
            }
            let nrm = norm(&work[j]);
            if nrm <= tol {
                break;
            }
            let inv = 1.0 / nrm;
            let start = q.len();
            q.extend(work[j].iter().map(|v| v * inv));
            let mut row = vec![0.0; k];
            row[j] = nrm;
            remaining.remove(pos);
            let qs = q[start..start + n].to_vec();
            for &t in &remaining {
                let c = dot(&qs, &work[t]);
                axpy(-c, &qs, &mut work[t]);
                row[t] = c;
                norms[t] = norm(&work[t]);
            }
            rfull.push(row);
            pivots.push(j);
            debug_assert_eq!(pivots.len(), s + 1);
        }

        let rank = pivots.len();
        let mut r = vec![0.0; rank * rank];
        for (i, row) in rfull.iter().enumerate() {
            for (s, &j) in pivots.iter().enumerate() {
                r[i * rank + s] = row[j];
            }
        }
        let mut dropped = remaining;
        dropped.sort_unstable();
        Self {
            n,
            q,
            r,
            pivots,
            dropped,
        }
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    #[inline]
    pub fn q_col(&self, s: usize) -> &[f64] {
        &self.q[s * self.n..(s + 1) * self.n]
    }

    /// `Q'v`.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rank()).map(|s| dot(self.q_col(s), v)).collect()
    }

    /// Removes the component of `v` in the spanned space, in place. Two
    /// passes keep the result orthogonal to working precision.
    pub fn project_out(&self, v: &mut [f64]) {
        for _ in 0..2 {
            for s in 0..self.rank() {
                let qs = self.q_col(s);
                let c = dot(qs, v);
                axpy(-c, qs, v);
            }
        }
    }

    /// Unit vector inside the spanned space that is orthogonal to every
    /// source column except `col`. Projecting onto the span without `col`
    /// then only needs this one direction: `P_without = P_full - u u'`.
    ///
    /// `None` if `col` is not a pivot or any column was dropped, since the
    /// dropped columns may then span part of the reduced space.
    pub fn exclusive_direction(&self, col: usize) -> Option<Vec<f64>> {
        if !self.dropped.is_empty() {
            return None;
        }
        let s = self.pivots.iter().position(|&j| j == col)?;
        let k = self.rank();
        // g = R^{-T} e_s by forward substitution on R'.
        let mut g = vec![0.0; k];
        for i in s..k {
            let mut v = if i == s { 1.0 } else { 0.0 };
            for j in s..i {
                v -= self.r[j * k + i] * g[j];
            }
            g[i] = v / self.r[i * k + i];
        }
        let mut u = vec![0.0; self.n];
        for (i, gi) in g.iter().enumerate().skip(s) {
            axpy(*gi, self.q_col(i), &mut u);
        }
        let nrm = norm(&u);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return None;
        }
        u.iter_mut().for_each(|v| *v /= nrm);
        Some(u)
    }

    /// Solves `R c = b` for the pivot-ordered triangular factor.
    fn back_substitute(&self, b: &[f64]) -> Vec<f64> {
        let k = self.rank();
        let mut c = b.to_vec();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r[i * k + j] * c[j];
            }
            c[i] = s / self.r[i * k + i];
        }
        c
    }

    /// Diagonal of `(R'R)^{-1}` in pivot order.
    fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let k = self.rank();
        // Rows of R^{-1}: solve R X = I column by column.
        let mut rinv = vec![0.0; k * k];
        for col in 0..k {
            let mut e = vec![0.0; k];
            e[col] = 1.0;
            let x = self.back_substitute(&e);
            for i in 0..k {
                rinv[i * k + col] = x[i];
            }
        }
        (0..k)
            .map(|i| rinv[i * k..(i + 1) * k].iter().map(|v| v * v).sum())
            .collect()
    }
}

/// Least-squares fit with classical standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dof: usize,
}

impl OlsFit {
    pub fn residual_sum_of_squares(&self) -> f64 {
        dot(&self.residuals, &self.residuals)
    }

    pub fn t_statistic(&self, j: usize) -> f64 {
        self.coefficients[j] / self.standard_errors[j]
    }
}

/// Ordinary least squares of `y` on the columns of `design`. No intercept is
/// added; include a column of ones when one is wanted.
pub fn ols(design: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let n = design.nrows();
    let k = design.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if !design.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    check_finite(y)?;
    if n <= k {
        return Err(Error::InsufficientData { n, required: k + 1 });
    }
    let basis = OrthoBasis::new(design);
    if basis.rank() < k {
        return Err(Error::RankDeficient);
    }
    let qty = basis.coefficients(y);
    let c_piv = basis.back_substitute(&qty);
    let mut residuals = y.to_vec();
    basis.project_out(&mut residuals);

    let dof = n - k;
    let sigma2 = dot(&residuals, &residuals) / dof as f64;
    let diag = basis.inverse_gram_diagonal();
    let mut coefficients = vec![0.0; k];
    let mut standard_errors = vec![0.0; k];
    for (s, &j) in basis.pivots().iter().enumerate() {
        coefficients[j] = c_piv[s];
        standard_errors[j] = (sigma2 * diag[s]).sqrt();
    }
    Ok(OlsFit {
        coefficients,
        standard_errors,
        residuals,
        dof,
    })
}

/// `v` minus its orthogonal projection onto the column space of
/// `conditioning`. Linearly dependent conditioning columns are dropped.
pub fn residualize(v: &[f64], conditioning: &Matrix) -> Result<Vec<f64>> {
    check_finite(v)?;
    if conditioning.ncols() == 0 {
        return Ok(v.to_vec());
    }
    if conditioning.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: conditioning.nrows(),
            found: v.len(),
        });
    }
    if !conditioning.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let basis = OrthoBasis::new(conditioning);
    let mut out = v.to_vec();
    basis.project_out(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Solves the normal equations by Gauss-Jordan elimination with partial
    /// pivoting. Independent of the Gram-Schmidt path.
    fn normal_equations(x: &Matrix, y: &[f64]) -> Vec<f64> {
        let k = x.ncols();
        let mut a = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                a[i][j] = dot(x.col(i), x.col(j));
            }
            a[i][k] = dot(x.col(i), y);
        }
        for c in 0..k {
            let p = (c..k)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            a.swap(c, p);
            let d = a[c][c];
            for v in a[c].iter_mut() {
                *v /= d;
            }
            for r in 0..k {
                if r != c {
                    let f = a[r][c];
                    let row_c = a[c].clone();
                    for (v, w) in a[r].iter_mut().zip(row_c) {
                        *v -= f * w;
                    }
                }
            }
        }
        a.iter().map(|row| row[k]).collect()
    }

    #[test]
    fn standardize_simple_column() {
        let m = Matrix::from_columns(3, &[vec![1.0, 2.0, 3.0]]).unwrap();
        let z = standardize(&m).unwrap();
        assert_eq!(z.col(0), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_hand_computed() {
        let m = Matrix::from_columns(3, &[vec![10.0, 10.0, 40.0]]).unwrap();
        let z = standardize(&m).unwrap();
        let sd = 300f64.sqrt();
        let want = [-10.0 / sd, -10.0 / sd, 20.0 / sd];
        for (a, b) in z.col(0).iter().zip(want) {
            assert!(close(*a, b, 1e-14));
        }
    }

    #[test]
    fn standardize_rejects_constant_and_nan() {
        let m = Matrix::from_columns(3, &[vec![1.0, 2.0, 3.0], vec![0.1, 0.1, 0.1]]).unwrap();
        assert!(matches!(standardize(&m), Err(Error::ZeroVarianceColumn(1))));
        let m = Matrix::from_columns(3, &[vec![1.0, f64::NAN, 3.0]]).unwrap();
        assert!(matches!(standardize(&m), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn ols_noiseless_recovers_coefficients() {
        let x1 = vec![0.3, -1.2, 2.5, 0.7, -0.4, 1.1];
        let x2 = vec![1.0, 0.5, -0.5, 2.0, -1.5, 0.25];
        let design = Matrix::from_columns(6, &[vec![1.0; 6], x1.clone(), x2.clone()]).unwrap();
        let c = [0.5, -2.0, 3.0];
        let y: Vec<f64> = (0..6).map(|i| c[0] + c[1] * x1[i] + c[2] * x2[i]).collect();
        let fit = ols(&design, &y).unwrap();
        for (a, b) in fit.coefficients.iter().zip(c) {
            assert!(close(*a, b, 1e-12));
        }
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn ols_intercept_only_is_mean_and_se() {
        let design = Matrix::from_columns(3, &[vec![1.0; 3]]).unwrap();
        let fit = ols(&design, &[1.0, 2.0, 3.0]).unwrap();
        assert!(close(fit.coefficients[0], 2.0, 1e-14));
        // sd = 1, se = 1 / sqrt(3)
        assert!(close(fit.standard_errors[0], 1.0 / 3f64.sqrt(), 1e-14));
        assert_eq!(fit.dof, 2);
    }

    #[test]
    fn ols_matches_normal_equations_oracle() {
        let x1 = vec![1.0, 2.0, 4.0, 3.0, 5.0];
        let x2 = vec![2.0, -1.0, 0.5, 1.5, 3.0];
        let y = vec![1.5, 0.3, 2.9, 2.2, 5.1];
        let design = Matrix::from_columns(5, &[x1, x2]).unwrap();
        let fit = ols(&design, &y).unwrap();
        let oracle = normal_equations(&design, &y);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
        for c in design.columns() {
            assert!(dot(c, &fit.residuals).abs() < 1e-8 * 5.0);
        }
    }

    #[test]
    fn ols_flags_collinear_design() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let design = Matrix::from_columns(4, &[vec![1.0; 4], x.clone(), x]).unwrap();
        assert!(matches!(
            ols(&design, &[1.0, 0.0, 2.0, 1.0]),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn residualize_edge_cases() {
        let v = vec![1.0, 2.0, 3.0, 4.0];
        let empty = Matrix::zeros(4, 0);
        assert_eq!(residualize(&v, &empty).unwrap(), v);

        let own = Matrix::from_columns(4, std::slice::from_ref(&v)).unwrap();
        assert!(residualize(&v, &own).unwrap().iter().all(|r| r.abs() < 1e-10));

        let ones = Matrix::from_columns(4, &[vec![1.0; 4]]).unwrap();
        let r = residualize(&v, &ones).unwrap();
        for (a, b) in r.iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert!(close(*a, b, 1e-12));
        }
    }

    #[test]
    fn residualize_drops_dependent_columns() {
        let a = vec![1.0, 0.0, 2.0, -1.0, 0.5];
        let b = vec![0.0, 1.0, 1.0, 3.0, -2.0];
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let c = Matrix::from_columns(5, &[a.clone(), b.clone(), sum]).unwrap();
        let basis = OrthoBasis::new(&c);
        assert_eq!(basis.rank(), 2);
        assert_eq!(basis.dropped().len(), 1);
        let v = vec![0.3, -0.2, 1.0, 0.8, 0.1];
        let r = residualize(&v, &c).unwrap();
        assert!(dot(&r, &a).abs() < 1e-10);
        assert!(dot(&r, &b).abs() < 1e-10);
    }

    #[test]
    fn exclusive_direction_gives_reduced_projection() {
        let cols = vec![
            vec![1.0, 0.5, -0.3, 2.0, 0.1, -1.1],
            vec![0.2, -1.0, 0.7, 0.4, 1.5, 0.0],
            vec![-0.6, 0.3, 0.9, -0.2, 0.8, 1.3],
        ];
        let full = Matrix::from_columns(6, &cols).unwrap();
        let v = vec![0.9, -0.4, 0.2, 1.7, -0.8, 0.35];
        let basis = OrthoBasis::new(&full);
        let mut r_full = v.clone();
        basis.project_out(&mut r_full);
        for drop in 0..3 {
            let keep: Vec<usize> = (0..3).filter(|&j| j != drop).collect();
            let want = residualize(&v, &full.select_columns(&keep)).unwrap();
            let u = basis.exclusive_direction(drop).unwrap();
            let c = dot(&u, &v);
            for i in 0..6 {
                assert!((r_full[i] + c * u[i] - want[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pearson_examples() {
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0, 1e-15));
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(), -1.0, 1e-15));
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, 1e-15));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]),
            Err(Error::ZeroVarianceColumn(1))
        ));
    }
}
