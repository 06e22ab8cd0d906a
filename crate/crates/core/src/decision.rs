//! Univariate mediation models and binary mediation decisions.
//!
//! A decision function maps `(x, m, y)` to "m mediates x -> y" or not. Two are
//! shipped: the first-order Sobel test on the product of coefficients and the
//! joint significance test of both paths. Other decision rules plug in by
//! implementing [`DecisionFunction`].

use serde::{Deserialize, Serialize};

use crate::dist::{normal_two_sided_p, t_two_sided_p};
use crate::error::{Error, Result};
use crate::numcore::{is_constant_vec, ols, Matrix};

/// Path estimates of the single-mediator model
/// `m = mu_m + alpha x + e_m`, `y = mu_y + tau x + beta m + e_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediationFit {
    pub alpha: f64,
    pub se_alpha: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub tau: f64,
    pub se_tau: f64,
    pub n: usize,
    /// Residual degrees of freedom of the mediator regression.
    pub dof_alpha: usize,
    /// Residual degrees of freedom of the outcome regression.
    pub dof_beta: usize,
}

impl MediationFit {
    pub fn indirect_effect(&self) -> f64 {
        self.alpha * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Sobel,
    JointSignificance,
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sobel" => Ok(TestKind::Sobel),
            "joint" | "joint-significance" | "joint_significance" => Ok(TestKind::JointSignificance),
            other => Err(Error::Config(format!("unknown decision test `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionSpec {
    pub kind: TestKind,
    pub alpha_level: f64,
}

impl Default for DecisionSpec {
    fn default() -> Self {
        Self {
            kind: TestKind::Sobel,
            alpha_level: 0.1,
        }
    }
}

impl DecisionSpec {
    pub fn new(kind: TestKind, alpha_level: f64) -> Result<Self> {
        let spec = Self { kind, alpha_level };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sobel(alpha_level: f64) -> Result<Self> {
        Self::new(TestKind::Sobel, alpha_level)
    }

    pub fn validate(&self) -> Result<()> {
        check_level(self.alpha_level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub decided: bool,
}

fn check_level(alpha_level: f64) -> Result<()> {
    if alpha_level > 0.0 && alpha_level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "alpha level must lie in (0, 1), got {alpha_level}"
        )))
    }
}

/// Fits the two regressions of the single-mediator model by OLS.
pub fn fit_univariate(x: &[f64], m: &[f64], y: &[f64]) -> Result<MediationFit> {
    let n = x.len();
    for len in [m.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if n < 4 {
        return Err(Error::InsufficientData { n, required: 4 });
    }
    if is_constant_vec(x) {
        return Err(Error::ZeroVarianceColumn(0));
    }
    if is_constant_vec(m) {
        return Err(Error::ZeroVarianceColumn(1));
    }
    let ones = vec![1.0; n];
    let design_m = Matrix::from_columns(n, &[ones.clone(), x.to_vec()])?;
    let fit_m = ols(&design_m, m)?;
    let design_y = Matrix::from_columns(n, &[ones, x.to_vec(), m.to_vec()])?;
    let fit_y = ols(&design_y, y)?;
    Ok(MediationFit {
        alpha: fit_m.coefficients[1],
        se_alpha: fit_m.standard_errors[1],
        beta: fit_y.coefficients[2],
        se_beta: fit_y.standard_errors[2],
        tau: fit_y.coefficients[1],
        se_tau: fit_y.standard_errors[1],
        n,
        dof_alpha: fit_m.dof,
        dof_beta: fit_y.dof,
    })
}

/// First-order Sobel test of `alpha * beta` against a standard normal.
pub fn sobel_test(fit: &MediationFit, alpha_level: f64) -> Result<TestResult> {
    check_level(alpha_level)?;
    let num = fit.alpha * fit.beta;
    let var = fit.beta * fit.beta * fit.se_alpha * fit.se_alpha
        + fit.alpha * fit.alpha * fit.se_beta * fit.se_beta;
    if !num.is_finite() || !var.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if num == 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            decided: false,
        });
    }
    if var <= 0.0 {
        return Err(Error::DegenerateSe);
    }
    let z = num / var.sqrt();
    let p = normal_two_sided_p(z);
    Ok(TestResult {
        statistic: z,
        p_value: p,
        decided: p < alpha_level,
    })
}

fn path_p_value(coef: f64, se: f64, dof: usize) -> Result<(f64, f64)> {
    if se > 0.0 {
        let t = coef / se;
        Ok((t, t_two_sided_p(t, dof as f64)))
    } else if coef == 0.0 {
        Ok((0.0, 1.0))
    } else {
        Err(Error::DegenerateSe)
    }
}

/// Joint significance: both paths individually significant by two-sided
/// t-tests. The reported p-value is the larger of the two and the statistic
/// is the t of that path.
pub fn joint_significance_test(fit: &MediationFit, alpha_level: f64) -> Result<TestResult> {
    check_level(alpha_level)?;
    let (t_a, p_a) = path_p_value(fit.alpha, fit.se_alpha, fit.dof_alpha)?;
    let (t_b, p_b) = path_p_value(fit.beta, fit.se_beta, fit.dof_beta)?;
    let (statistic, p_value) = if p_a >= p_b { (t_a, p_a) } else { (t_b, p_b) };
    Ok(TestResult {
        statistic,
        p_value,
        decided: p_a < alpha_level && p_b < alpha_level,
    })
}

/// A binary mediation decision on `(x, m, y)`.
pub trait DecisionFunction: Sync {
    fn evaluate(&self, x: &[f64], m: &[f64], y: &[f64]) -> Result<TestResult>;

    /// Numerical failures count as "not a mediator".
    fn decide(&self, x: &[f64], m: &[f64], y: &[f64]) -> bool {
        match self.evaluate(x, m, y) {
            Ok(r) => r.decided,
            Err(e) => {
                log::debug!("decision degraded to negative: {e}");
                false
            }
        }
    }
}

impl DecisionFunction for DecisionSpec {
    fn evaluate(&self, x: &[f64], m: &[f64], y: &[f64]) -> Result<TestResult> {
        let fit = fit_univariate(x, m, y)?;
        match self.kind {
            TestKind::Sobel => sobel_test(&fit, self.alpha_level),
            TestKind::JointSignificance => joint_significance_test(&fit, self.alpha_level),
        }
    }
}

/// Applies `spec` to `(x, m, y)`; any fitting failure yields `false`.
pub fn decide(spec: &DecisionSpec, x: &[f64], m: &[f64], y: &[f64]) -> bool {
    DecisionFunction::decide(spec, x, m, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{normal_cdf, t_cdf};

    fn fit_with(alpha: f64, se_alpha: f64, beta: f64, se_beta: f64) -> MediationFit {
        MediationFit {
            alpha,
            se_alpha,
            beta,
            se_beta,
            tau: 0.0,
            se_tau: 0.1,
            n: 100,
            dof_alpha: 98,
            dof_beta: 97,
        }
    }

    #[test]
    fn sobel_zero_alpha() {
        let r = sobel_test(&fit_with(0.0, 0.1, 0.7, 0.1), 0.1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.decided);
    }

    #[test]
    fn sobel_hand_computed() {
        let r = sobel_test(&fit_with(0.5, 0.1, 0.5, 0.1), 0.1).unwrap();
        let z = 0.25 / (0.0025f64 + 0.0025).sqrt();
        assert!((r.statistic - z).abs() < 1e-12);
        assert!((r.statistic - 3.5355).abs() < 1e-4);
        assert!((r.p_value - 2.0 * (1.0 - normal_cdf(z))).abs() < 1e-12);
        assert!((r.p_value - 4.07e-4).abs() < 1e-6);
        assert!(r.decided);
    }

    #[test]
    fn sobel_symmetric_in_paths() {
        let a = sobel_test(&fit_with(0.3, 0.05, -0.8, 0.2), 0.1).unwrap();
        let b = sobel_test(&fit_with(-0.8, 0.2, 0.3, 0.05), 0.1).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-15);
    }

    #[test]
    fn sobel_degenerate_se() {
        assert!(matches!(
            sobel_test(&fit_with(0.5, 0.0, 0.5, 0.0), 0.1),
            Err(Error::DegenerateSe)
        ));
    }

    #[test]
    fn joint_requires_both_paths() {
        let r = joint_significance_test(&fit_with(0.5, 0.05, 0.05, 0.2), 0.1).unwrap();
        assert!(!r.decided);
        let r = joint_significance_test(&fit_with(0.5, 0.05, 0.5, 0.05), 0.1).unwrap();
        assert!(r.decided);
    }

    #[test]
    fn joint_p_values_match_t_oracle() {
        let fit = fit_with(0.2, 0.1, -0.3, 0.2);
        let r = joint_significance_test(&fit, 0.5).unwrap();
        let p_a = 2.0 * (1.0 - t_cdf(2.0, 98.0));
        let p_b = 2.0 * (1.0 - t_cdf(1.5, 97.0));
        assert!((r.p_value - p_a.max(p_b)).abs() < 1e-12);
    }

    #[test]
    fn collinear_mediator_is_rank_deficient() {
        let x = vec![0.1, 0.5, -0.3, 1.2, 0.8, -1.0];
        let y = vec![1.0, 0.2, 0.3, -0.4, 0.9, 0.1];
        assert!(matches!(fit_univariate(&x, &x, &y), Err(Error::RankDeficient)));
        assert!(!decide(&DecisionSpec::default(), &x, &x, &y));
    }

    #[test]
    fn noiseless_paths_recovered() {
        let x = vec![0.1, 0.5, -0.3, 1.2, 0.8, -1.0, 0.0];
        let e = vec![0.3, -0.2, 0.1, 0.0, -0.4, 0.25, 0.05];
        let m: Vec<f64> = x.iter().zip(&e).map(|(x, e)| 0.4 * x + e).collect();
        let y: Vec<f64> = x.iter().zip(&m).map(|(x, m)| 0.1 * x + 0.3 * m).collect();
        let fit = fit_univariate(&x, &m, &y).unwrap();
        assert!((fit.beta - 0.3).abs() < 1e-12);
        assert!((fit.tau - 0.1).abs() < 1e-12);
        // alpha is the OLS slope of m on x, exact only when e is orthogonal
        // to x; check against the closed form instead.
        let mx = x.iter().sum::<f64>() / 7.0;
        let mm = m.iter().sum::<f64>() / 7.0;
        let sxy: f64 = x.iter().zip(&m).map(|(a, b)| (a - mx) * (b - mm)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        assert!((fit.alpha - sxy / sxx).abs() < 1e-12);
    }

    #[test]
    fn level_validation() {
        assert!(DecisionSpec::sobel(0.0).is_err());
        assert!(DecisionSpec::sobel(1.0).is_err());
        assert!(DecisionSpec::sobel(0.05).is_ok());
    }
}
