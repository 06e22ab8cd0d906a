//! Simulation harness: runs selectors over replicate datasets of a condition
//! and scores their selections against the known true mediators.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{filter_method, hima, HimaConfig};
use crate::cmf::{cmf_outer, CmfConfig};
use crate::decision::DecisionSpec;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::simgen::{SimCondition, SimData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cmf,
    Filter,
    Hima,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cmf, Method::Filter, Method::Hima];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cmf => "cmf",
            Method::Filter => "filter",
            Method::Hima => "hima",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`; expected cmf, filter or hima")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfigs {
    pub cmf: CmfConfig,
    pub filter: DecisionSpec,
    pub hima: HimaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub replicate: usize,
    pub n: usize,
    /// 0-based mediator indices, ascending.
    pub selected: Vec<usize>,
    /// Set when the replicate failed; such replicates are not scored.
    pub error: Option<String>,
    /// Wall time; not serialized so result files stay reproducible.
    #[serde(skip)]
    pub runtime_ms: u64,
}

const CMF_TAG: u64 = 0x43_4d46;
const HIMA_TAG: u64 = 0x4849_4d41;
const DATA_TAG: u64 = 0x4441_5441;

/// Runs every method on `cond.n_reps` replicates. Replicate `r` draws its
/// data and method seeds from `(seed, r)` only. Results are ordered by
/// replicate, then by the order of `methods`.
pub fn run_condition(
    cond: &SimCondition,
    methods: &[Method],
    configs: &MethodConfigs,
    seed: u64,
) -> Result<Vec<MethodResult>> {
    cond.validate()?;
    configs.cmf.validate()?;
    configs.filter.validate()?;
    configs.hima.validate()?;
    let target = cond.target()?;
    let data_seed = derive_seed(seed, DATA_TAG);
    let per_rep: Vec<Vec<MethodResult>> = (0..cond.n_reps)
        .into_par_iter()
        .map(|rep| match cond.generate(target.as_ref(), data_seed, rep as u64) {
            Ok(data) => methods
                .iter()
                .map(|&m| run_method(m, &data, configs, seed, rep))
                .collect(),
            Err(e) => {
                log::warn!("replicate {rep} failed to generate: {e}");
                methods
                    .iter()
                    .map(|&m| MethodResult {
                        method: m,
                        replicate: rep,
                        n: 0,
                        selected: Vec::new(),
                        error: Some(e.to_string()),
                        runtime_ms: 0,
                    })
                    .collect()
            }
        })
        .collect();
    Ok(per_rep.into_iter().flatten().collect())
}

fn run_method(method: Method, data: &SimData, configs: &MethodConfigs, seed: u64, rep: usize) -> MethodResult {
    let start = Instant::now();
    let outcome = match method {
        Method::Filter => filter_method(&data.x, &data.m, &data.y, &configs.filter),
        Method::Cmf => {
            let cfg = CmfConfig {
                seed: derive_seed(derive_seed(seed, CMF_TAG), rep as u64),
                ..configs.cmf.clone()
            };
            cmf_outer(&data.x, &data.m, &data.y, &cfg).map(|r| r.selected)
        }
        Method::Hima => {
            let cfg = HimaConfig {
                seed: derive_seed(derive_seed(seed, HIMA_TAG), rep as u64),
                ..configs.hima.clone()
            };
            hima(&data.x, &data.m, &data.y, &cfg).map(|r| r.selected)
        }
    };
    let runtime_ms = start.elapsed().as_millis() as u64;
    let (selected, error) = match outcome {
        Ok(s) => (s, None),
        Err(e) => {
            log::warn!("{method} failed on replicate {rep}: {e}");
            (Vec::new(), Some(e.to_string()))
        }
    };
    MethodResult {
        method,
        replicate: rep,
        n: data.x.len(),
        selected,
        error,
        runtime_ms,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub method: Option<Method>,
    /// Replicates scored.
    pub replicates: usize,
    /// Replicates that failed and were left out.
    pub failed: usize,
    /// Share of replicates selecting each mediator.
    pub selection_rates: Vec<f64>,
    /// Per true mediator, in the order of `truth`.
    pub power: Vec<f64>,
    /// Mean over replicates of false selections over non-mediators.
    pub fpr: f64,
    /// Pooled true selections over all selections; 1 when nothing was
    /// selected.
    pub ppv: f64,
}

/// Scores one method's results against `truth` among `p` mediators.
pub fn score(results: &[MethodResult], truth: &[usize], p: usize) -> Result<ScoreTable> {
    let ok: Vec<&MethodResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let failed = results.len() - ok.len();
    if ok.is_empty() {
        return Err(Error::EmptyResults);
    }
    if let Some(t) = truth.iter().find(|&&t| t >= p) {
        return Err(Error::Config(format!("true mediator {t} out of range for {p} mediators")));
    }
    let reps = ok.len() as f64;
    let mut counts = vec![0usize; p];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fpr_sum = 0.0;
    let negatives = p - truth.len();
    for r in &ok {
        let mut fp_rep = 0usize;
        for &j in &r.selected {
            if j >= p {
                return Err(Error::Config(format!("selected index {j} out of range for {p} mediators")));
            }
            counts[j] += 1;
            if truth.contains(&j) {
                tp += 1;
            } else {
                fp_rep += 1;
            }
        }
        fp += fp_rep;
        if negatives > 0 {
            fpr_sum += fp_rep as f64 / negatives as f64;
        }
    }
    let method = ok[0].method;
    Ok(ScoreTable {
        method: ok.iter().all(|r| r.method == method).then_some(method),
        replicates: ok.len(),
        failed,
        selection_rates: counts.iter().map(|&c| c as f64 / reps).collect(),
        power: truth.iter().map(|&t| counts[t] as f64 / reps).collect(),
        fpr: fpr_sum / reps,
        ppv: if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 },
    })
}

/// One score table per method present in `results`, in `methods` order.
pub fn score_by_method(results: &[MethodResult], methods: &[Method], truth: &[usize], p: usize) -> Result<Vec<ScoreTable>> {
    methods
        .iter()
        .map(|&m| {
            let subset: Vec<MethodResult> = results.iter().filter(|r| r.method == m).cloned().collect();
            let mut table = score(&subset, truth, p)?;
            table.method = Some(m);
            Ok(table)
        })
        .collect()
}
