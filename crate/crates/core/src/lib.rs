//! Mediator selection for exploratory mediation analysis with many candidate
//! mediators.
//!
//! The central piece is the coordinate-wise mediation filter ([`cmf`]): a
//! randomized binary coordinate descent that applies a univariate mediation
//! decision to each candidate conditional on the currently selected set, run
//! from many random starts and aggregated into selection rates. Baseline
//! selectors, data generators for controlled experiments and a simulation
//! harness live alongside it.

// Index loops mirror the matrix algebra, and negated comparisons are how
// NaN inputs are rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cmf;
pub mod decision;
pub mod dist;
mod error;
pub mod numcore;
pub mod preprocess;
pub mod rng;
pub mod simgen;
pub mod study;

pub use baselines::{filter_method, hima, lasso_cd, soft_threshold, HimaConfig, HimaResult, LassoFit};
pub use cmf::{
    cmf_inner, cmf_outer, rank_and_cut, CmfConfig, DecisionVector, InnerOutcome, InnerParams,
    SelectionResult,
};
pub use decision::{
    decide, fit_univariate, joint_significance_test, sobel_test, DecisionSpec, MediationFit,
    TestKind, TestResult,
};
pub use error::{Error, Result};
pub use numcore::{ols, pearson, residualize, standardize, Matrix, OlsFit};
pub use preprocess::{prefilter_topk, residualize_covariates, Dataset};
pub use simgen::{
    block_highdim_cov, exact_correlation_sample, fixture_correlation, fixture_covariance,
    implied_covariance, mvn_sample, BlockSpec, CovarianceSpec, Fixture, PathModel, SimCondition,
};
pub use study::{run_condition, score, Method, MethodConfigs, MethodResult, ScoreTable};
