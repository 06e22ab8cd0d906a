//! Coordinate-wise mediation filter.
//!
//! The inner loop is a randomized binary coordinate descent over the
//! candidate mediators. Visiting coordinate `p`, it residualizes `x` and `y`
//! on the currently selected mediators other than `p` and re-applies the
//! univariate decision to `(r_x, M[:, p], r_y)`. The outer layer repeats the
//! inner loop from many random starts and reports, per mediator, the share of
//! starts that ended with it selected.

use std::borrow::Cow;
use std::ops::Range;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::{DecisionFunction, DecisionSpec};
use crate::error::{Error, Result};
use crate::numcore::{dot, is_constant_vec, standardize_vec, Matrix, OrthoBasis};
use crate::rng::{stream, Stream};

/// Feature sampling switches on automatically above this many mediators.
pub const AUTO_FEATURE_SAMPLING_ABOVE: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmfConfig {
    pub decision: DecisionSpec,
    pub n_starts: usize,
    pub max_sweeps: usize,
    /// `None` enables feature sampling when there are more than
    /// [`AUTO_FEATURE_SAMPLING_ABOVE`] mediators.
    pub feature_sampling: Option<bool>,
    pub p_start: f64,
    /// Unchanged sweeps required for convergence under feature sampling.
    pub stable_sweeps: usize,
    pub seed: u64,
    pub cutoff: f64,
}

impl Default for CmfConfig {
    fn default() -> Self {
        CmfConfig {
            decision: DecisionSpec::default(),
            n_starts: 1000,
            max_sweeps: 25,
            feature_sampling: None,
            p_start: 0.1,
            stable_sweeps: 3,
            seed: 0,
            cutoff: 0.5,
        }
    }
}

impl CmfConfig {
    pub fn validate(&self) -> Result<()> {
        self.decision.validate()?;
        if self.n_starts == 0 {
            return Err(Error::Config("n_starts must be at least 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        if self.stable_sweeps == 0 {
            return Err(Error::Config("stable_sweeps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_start) {
            return Err(Error::Config(format!("p_start must lie in [0, 1], got {}", self.p_start)));
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(Error::Config(format!("cutoff must lie in [0, 1], got {}", self.cutoff)));
        }
        Ok(())
    }

    /// Inner-loop parameters for `p` mediators, with feature sampling
    /// resolved and the sweep budget raised so that every coordinate is
    /// visited about three times in expectation.
    pub fn inner_params(&self, p: usize) -> InnerParams {
        let feature_sampling = self
            .feature_sampling
            .unwrap_or(p > AUTO_FEATURE_SAMPLING_ABOVE);
        let mut max_sweeps = self.max_sweeps;
        if feature_sampling && p > 0 {
            let per_sweep = sqrt_ceil(p);
            max_sweeps = max_sweeps.max((3 * p).div_ceil(per_sweep));
        }
        InnerParams {
            max_sweeps,
            feature_sampling,
            stable_sweeps: if feature_sampling { self.stable_sweeps } else { 1 },
        }
    }
}

/// `ceil(sqrt(p))` in integer arithmetic.
pub fn sqrt_ceil(p: usize) -> usize {
    let mut r = (p as f64).sqrt() as usize;
    while r * r < p {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= p {
        r -= 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerParams {
    pub max_sweeps: usize,
    pub feature_sampling: bool,
    /// Consecutive unchanged sweeps that count as convergence.
    pub stable_sweeps: usize,
}

impl InnerParams {
    pub fn exhaustive(max_sweeps: usize) -> Self {
        InnerParams {
            max_sweeps,
            feature_sampling: false,
            stable_sweeps: 1,
        }
    }
}

/// One in/out bit per candidate mediator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecisionVector {
    pub bits: Vec<bool>,
}

impl DecisionVector {
    pub fn zeros(p: usize) -> Self {
        DecisionVector { bits: vec![false; p] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        DecisionVector { bits }
    }

    /// Coordinate-wise Bernoulli(`prob`) draw.
    pub fn random<R: Rng + ?Sized>(p: usize, prob: f64, rng: &mut R) -> Self {
        let bits = (0..p).map(|_| prob > 0.0 && rng.random::<f64>() < prob).collect();
        DecisionVector { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, p: usize) -> bool {
        self.bits[p]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerOutcome {
    pub vector: DecisionVector,
    pub converged: bool,
    pub sweeps_used: usize,
    /// Evaluations whose conditioning set was truncated to `n - 3` columns.
    pub capped_evaluations: u64,
}

/// One coordinate evaluation, reported to trace observers.
#[derive(Debug, Clone, Copy)]
pub struct Visit<'a> {
    /// 1-based sweep number.
    pub sweep: usize,
    /// 0-based position within the sweep.
    pub step: usize,
    pub coordinate: usize,
    /// Columns conditioned on, in insertion order.
    pub conditioning: &'a [usize],
    pub decision: bool,
}

/// Residuals of `x` and `y` on a conditioning set, cached by set so that
/// consecutive visits with an unchanged selection reuse the projection.
struct Conditioner<'a> {
    x: &'a [f64],
    y: &'a [f64],
    m: &'a Matrix,
    key: Option<Vec<usize>>,
    basis: Option<OrthoBasis>,
    rx: Vec<f64>,
    ry: Vec<f64>,
}

impl<'a> Conditioner<'a> {
    fn new(x: &'a [f64], m: &'a Matrix, y: &'a [f64]) -> Self {
        Conditioner {
            x,
            y,
            m,
            key: None,
            basis: None,
            rx: Vec::new(),
            ry: Vec::new(),
        }
    }

    fn ensure(&mut self, sorted: &[usize]) {
        if self.key.as_deref() == Some(sorted) {
            return;
        }
        self.rx = self.x.to_vec();
        self.ry = self.y.to_vec();
        if sorted.is_empty() {
            self.basis = None;
        } else {
            let basis = OrthoBasis::new(&self.m.select_columns(sorted));
            basis.project_out(&mut self.rx);
            basis.project_out(&mut self.ry);
            self.basis = Some(basis);
        }
        self.key = Some(sorted.to_vec());
    }

    /// Residuals on `sorted`.
    fn residuals(&mut self, sorted: &[usize]) -> (Cow<'_, [f64]>, Cow<'_, [f64]>) {
        self.ensure(sorted);
        (Cow::Borrowed(&self.rx[..]), Cow::Borrowed(&self.ry[..]))
    }

    /// Residuals on `full` minus `drop`, where `drop` belongs to `full`.
    fn residuals_without(&mut self, full: &[usize], drop: usize) -> (Cow<'_, [f64]>, Cow<'_, [f64]>) {
        self.ensure(full);
        let local = full.binary_search(&drop).expect("dropped column is in the set");
        let dir = self.basis.as_ref().and_then(|b| b.exclusive_direction(local));
        match dir {
            Some(u) => {
                let cx = dot(&u, self.x);
                let cy = dot(&u, self.y);
                let rx = self.rx.iter().zip(&u).map(|(r, ui)| r + cx * ui).collect();
                let ry = self.ry.iter().zip(&u).map(|(r, ui)| r + cy * ui).collect();
                (Cow::Owned(rx), Cow::Owned(ry))
            }
            None => {
                let reduced: Vec<usize> = full.iter().copied().filter(|&j| j != drop).collect();
                self.residuals(&reduced)
            }
        }
    }
}

fn check_inner_dims(x: &[f64], m: &Matrix, y: &[f64], start: &DecisionVector) -> Result<()> {
    let n = m.nrows();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if start.len() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.ncols(),
            found: start.len(),
        });
    }
    Ok(())
}

/// Runs the inner loop from `start`. Inputs are expected to be standardized.
pub fn cmf_inner<D: DecisionFunction + ?Sized>(
    x: &[f64],
    m: &Matrix,
    y: &[f64],
    decision: &D,
    start: &DecisionVector,
    params: &InnerParams,
    rng: &mut Stream,
) -> Result<InnerOutcome> {
    cmf_inner_traced(x, m, y, decision, start, params, rng, |_| {})
}

/// [`cmf_inner`] with a callback after every coordinate evaluation.
#[allow(clippy::too_many_arguments)]
pub fn cmf_inner_traced<D, F>(
    x: &[f64],
    m: &Matrix,
    y: &[f64],
    decision: &D,
    start: &DecisionVector,
    params: &InnerParams,
    rng: &mut Stream,
    mut observe: F,
) -> Result<InnerOutcome>
where
    D: DecisionFunction + ?Sized,
    F: FnMut(&Visit<'_>),
{
    check_inner_dims(x, m, y, start)?;
    let p_total = m.ncols();
    let cap = m.nrows().saturating_sub(3);
    let mut bits = start.bits.clone();
    // Selected columns, least recently confirmed first.
    let mut order: Vec<usize> = start.selected();
    let mut cond = Conditioner::new(x, m, y);
    let mut capped = 0u64;
    let mut stable = 0usize;
    let mut converged = false;
    let mut sweeps_used = 0usize;
    let mut visit: Vec<usize> = (0..p_total).collect();
    let per_sweep = if params.feature_sampling {
        sqrt_ceil(p_total)
    } else {
        p_total
    };
    let mut conditioning: Vec<usize> = Vec::new();
    let mut sorted: Vec<usize> = Vec::new();

    for sweep in 1..=params.max_sweeps {
        sweeps_used = sweep;
        let before = bits.clone();
        if params.feature_sampling {
            visit = index::sample(rng, p_total, per_sweep).into_vec();
        }
        visit.shuffle(rng);
        for (step, &p) in visit.iter().enumerate() {
            conditioning.clear();
            conditioning.extend(order.iter().copied().filter(|&j| j != p));
            let truncated = conditioning.len() > cap;
            if truncated {
                conditioning.drain(..conditioning.len() - cap);
                capped += 1;
            }
            let decided = if bits[p] && !truncated {
                sorted.clear();
                sorted.extend_from_slice(&order);
                sorted.sort_unstable();
                let (rx, ry) = cond.residuals_without(&sorted, p);
                decision.decide(&rx, m.col(p), &ry)
            } else {
                sorted.clear();
                sorted.extend_from_slice(&conditioning);
                sorted.sort_unstable();
                let (rx, ry) = cond.residuals(&sorted);
                decision.decide(&rx, m.col(p), &ry)
            };
            observe(&Visit {
                sweep,
                step,
                coordinate: p,
                conditioning: &conditioning,
                decision: decided,
            });
            if decided {
                if let Some(pos) = order.iter().position(|&j| j == p) {
                    order.remove(pos);
                }
                order.push(p);
            } else if bits[p] {
                order.retain(|&j| j != p);
            }
            bits[p] = decided;
        }
        if bits == before {
            stable += 1;
            if stable >= params.stable_sweeps {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
    }
    Ok(InnerOutcome {
        vector: DecisionVector { bits },
        converged,
        sweeps_used,
        capped_evaluations: capped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Share of starts ending with each mediator selected.
    pub rates: Vec<f64>,
    /// Indices with `rate >= cutoff`, ascending.
    pub selected: Vec<usize>,
    /// All indices by descending rate, ties by ascending index.
    pub ranking: Vec<usize>,
    pub n_starts_run: usize,
    pub convergence_fraction: f64,
    /// `sweep_histogram[s]` counts starts that stopped after `s` sweeps.
    pub sweep_histogram: Vec<u64>,
    /// Constant mediator columns, excluded from the search.
    pub excluded_columns: Vec<usize>,
    pub capped_evaluations: u64,
    pub feature_sampling: bool,
    pub max_sweeps: usize,
}

/// Standardized inputs for the outer loop with constant mediators removed.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Standardized non-constant mediator columns.
    pub m: Matrix,
    /// Original index of each column of `m`.
    pub active: Vec<usize>,
    pub excluded: Vec<usize>,
    pub p_total: usize,
}

impl PreparedData {
    pub fn new(x: &[f64], m: &Matrix, y: &[f64]) -> Result<Self> {
        let n = m.nrows();
        for len in [x.len(), y.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        if n < 4 {
            return Err(Error::InsufficientData { n, required: 4 });
        }
        if !m.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        let x = standardize_vec(x)?;
        let y = standardize_vec(y)?;
        let mut active = Vec::new();
        let mut excluded = Vec::new();
        let mut cols = Vec::new();
        for (j, c) in m.columns().enumerate() {
            if is_constant_vec(c) {
                log::warn!("mediator column {j} is constant; excluded with rate 0");
                excluded.push(j);
            } else {
                cols.push(standardize_vec(c)?);
                active.push(j);
            }
        }
        Ok(PreparedData {
            x,
            y,
            m: Matrix::from_columns(n, &cols)?,
            active,
            excluded,
            p_total: m.ncols(),
        })
    }
}

/// Integer tallies over a set of starts. Merging is an exact, commutative
/// sum, so any partition of the starts gives the same totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StartTally {
    /// Per active column.
    pub counts: Vec<u64>,
    pub runs: u64,
    pub converged: u64,
    pub sweep_histogram: Vec<u64>,
    pub capped_evaluations: u64,
}

impl StartTally {
    fn empty(p: usize, max_sweeps: usize) -> Self {
        StartTally {
            counts: vec![0; p],
            runs: 0,
            converged: 0,
            sweep_histogram: vec![0; max_sweeps + 1],
            capped_evaluations: 0,
        }
    }

    fn add(&mut self, outcome: &InnerOutcome) {
        for (c, b) in self.counts.iter_mut().zip(&outcome.vector.bits) {
            *c += *b as u64;
        }
        self.runs += 1;
        self.converged += outcome.converged as u64;
        self.sweep_histogram[outcome.sweeps_used] += 1;
        self.capped_evaluations += outcome.capped_evaluations;
    }

    pub fn merge(mut self, other: StartTally) -> StartTally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        for (a, b) in self.sweep_histogram.iter_mut().zip(other.sweep_histogram) {
            *a += b;
        }
        self.runs += other.runs;
        self.converged += other.converged;
        self.capped_evaluations += other.capped_evaluations;
        self
    }
}

fn run_start(data: &PreparedData, cfg: &CmfConfig, params: &InnerParams, index: u64) -> Result<InnerOutcome> {
    let mut rng = stream(cfg.seed, index);
    let start = DecisionVector::random(data.m.ncols(), cfg.p_start, &mut rng);
    cmf_inner(&data.x, &data.m, &data.y, &cfg.decision, &start, params, &mut rng)
}

/// Runs the starts with indices in `starts`. Start `i` always uses stream
/// `(cfg.seed, i)`, so disjoint ranges can be run separately and merged.
pub fn run_starts(data: &PreparedData, cfg: &CmfConfig, starts: Range<u64>) -> Result<StartTally> {
    let params = cfg.inner_params(data.m.ncols());
    let p = data.m.ncols();
    starts
        .into_par_iter()
        .map(|i| run_start(data, cfg, &params, i))
        .try_fold(
            || StartTally::empty(p, params.max_sweeps),
            |mut tally, outcome| {
                tally.add(&outcome?);
                Ok(tally)
            },
        )
        .try_reduce(|| StartTally::empty(p, params.max_sweeps), |a, b| Ok(a.merge(b)))
}

/// Turns tallies into a [`SelectionResult`] in original column indices.
pub fn finish(data: &PreparedData, cfg: &CmfConfig, tally: &StartTally) -> SelectionResult {
    let params = cfg.inner_params(data.m.ncols());
    let mut rates = vec![0.0; data.p_total];
    if tally.runs > 0 {
        for (local, &orig) in data.active.iter().enumerate() {
            rates[orig] = tally.counts[local] as f64 / tally.runs as f64;
        }
    }
    let (ranking, selected) = rank_and_cut(&rates, cfg.cutoff);
    SelectionResult {
        rates,
        selected,
        ranking,
        n_starts_run: tally.runs as usize,
        convergence_fraction: if tally.runs > 0 {
            tally.converged as f64 / tally.runs as f64
        } else {
            0.0
        },
        sweep_histogram: tally.sweep_histogram.clone(),
        excluded_columns: data.excluded.clone(),
        capped_evaluations: tally.capped_evaluations,
        feature_sampling: params.feature_sampling,
        max_sweeps: params.max_sweeps,
    }
}

/// Standardizes the data, runs `cfg.n_starts` random starts and aggregates
/// their final vectors into selection rates.
pub fn cmf_outer(x: &[f64], m: &Matrix, y: &[f64], cfg: &CmfConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let data = PreparedData::new(x, m, y)?;
    let tally = run_starts(&data, cfg, 0..cfg.n_starts as u64)?;
    Ok(finish(&data, cfg, &tally))
}

/// Ranks columns by descending rate (ties by ascending index) and selects
/// those with `rate >= cutoff`. Indices are 0-based.
pub fn rank_and_cut(rates: &[f64], cutoff: f64) -> (Vec<usize>, Vec<usize>) {
    let mut ranking: Vec<usize> = (0..rates.len()).collect();
    ranking.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    let selected = (0..rates.len()).filter(|&j| rates[j] >= cutoff).collect();
    (ranking, selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::decide;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn toy(n: usize, seed: u64) -> (Vec<f64>, Matrix, Vec<f64>) {
        let mut rng = Stream::seed_from_u64(seed);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let x: Vec<f64> = (0..n).map(|_| g()).collect();
        let m1: Vec<f64> = x.iter().map(|v| 0.5 * v + g()).collect();
        let m2: Vec<f64> = (0..n).map(|_| g()).collect();
        let m3: Vec<f64> = x.iter().map(|v| 0.3 * v + g()).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.4 * m1[i] + 0.2 * m3[i] + g()).collect();
        let m = Matrix::from_columns(n, &[m1, m2, m3]).unwrap();
        let data = PreparedData::new(&x, &m, &y).unwrap();
        (data.x, data.m, data.y)
    }

    #[test]
    fn sqrt_ceil_values() {
        let want = [0, 1, 2, 2, 2, 3, 3, 3, 3, 3, 4];
        for (p, w) in want.iter().enumerate() {
            assert_eq!(sqrt_ceil(p), *w, "p={p}");
        }
        assert_eq!(sqrt_ceil(1000), 32);
    }

    #[test]
    fn coverage_guard_raises_sweeps() {
        let cfg = CmfConfig::default();
        let params = cfg.inner_params(1000);
        assert!(params.feature_sampling);
        assert!(params.max_sweeps * 32 >= 3000);
        let small = cfg.inner_params(10);
        assert!(!small.feature_sampling);
        assert_eq!(small.max_sweeps, 25);
        assert_eq!(small.stable_sweeps, 1);
    }

    #[test]
    fn single_mediator_is_univariate_decision() {
        let (x, m, y) = toy(80, 3);
        let m1 = m.select_columns(&[0]);
        let spec = DecisionSpec::default();
        let want = decide(&spec, &x, m1.col(0), &y);
        for b in [false, true] {
            let mut rng = stream(1, 0);
            let out = cmf_inner(
                &x,
                &m1,
                &y,
                &spec,
                &DecisionVector::from_bits(vec![b]),
                &InnerParams::exhaustive(25),
                &mut rng,
            )
            .unwrap();
            assert_eq!(out.vector.bits, vec![want]);
            assert!(out.converged && out.sweeps_used <= 2);
        }
    }

    #[test]
    fn first_visit_from_empty_start_sees_no_conditioning() {
        let (x, m, y) = toy(60, 9);
        let spec = DecisionSpec::default();
        for s in 0..10 {
            let mut rng = stream(s, 0);
            let mut first = None;
            cmf_inner_traced(
                &x,
                &m,
                &y,
                &spec,
                &DecisionVector::zeros(3),
                &InnerParams::exhaustive(25),
                &mut rng,
                |v| {
                    if first.is_none() {
                        first = Some((v.coordinate, v.conditioning.is_empty(), v.decision));
                    }
                },
            )
            .unwrap();
            let (p, empty, d) = first.unwrap();
            assert!(empty);
            assert_eq!(d, decide(&spec, &x, m.col(p), &y));
        }
    }

    #[test]
    fn rank_and_cut_examples() {
        let (ranking, selected) = rank_and_cut(&[0.9, 0.1, 0.9], 0.5);
        assert_eq!(ranking, vec![0, 2, 1]);
        assert_eq!(selected, vec![0, 2]);
        let (_, all) = rank_and_cut(&[0.0, 0.3, 1.0], 0.0);
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn tally_merge_is_exact() {
        let (x, m, y) = toy(70, 5);
        let data = PreparedData::new(&x, &m, &y).unwrap();
        let cfg = CmfConfig {
            n_starts: 40,
            p_start: 0.5,
            seed: 11,
            ..CmfConfig::default()
        };
        let whole = run_starts(&data, &cfg, 0..40).unwrap();
        let parts = run_starts(&data, &cfg, 0..15)
            .unwrap()
            .merge(run_starts(&data, &cfg, 15..40).unwrap());
        assert_eq!(whole, parts);
    }

    #[test]
    fn constant_mediator_is_excluded() {
        let (x, m, y) = toy(50, 2);
        let mut cols: Vec<Vec<f64>> = m.columns().map(|c| c.to_vec()).collect();
        cols.insert(1, vec![2.5; 50]);
        let m = Matrix::from_columns(50, &cols).unwrap();
        let cfg = CmfConfig {
            n_starts: 20,
            ..CmfConfig::default()
        };
        let res = cmf_outer(&x, &m, &y, &cfg).unwrap();
        assert_eq!(res.excluded_columns, vec![1]);
        assert_eq!(res.rates[1], 0.0);
        assert_eq!(res.rates.len(), 4);
    }

    #[test]
    fn config_validation() {
        let bad = CmfConfig {
            p_start: 1.5,
            ..CmfConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CmfConfig {
            n_starts: 0,
            ..CmfConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
