//! Real-data pipeline: read a CSV, adjust for covariates, pre-screen, run a
//! selector and write the report, ranked rates and scree data.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use medfilter::baselines::{filter_method, hima};
use medfilter::cmf::cmf_outer;
use medfilter::study::{Method, MethodConfigs};
use medfilter::{prefilter_topk, rank_and_cut, residualize_covariates, Dataset, Matrix};

use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json, write_scree_svg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub x_column: String,
    pub y_column: String,
    pub covariate_columns: Vec<String>,
    /// `None` takes every column not used as exposure, outcome or covariate.
    pub mediator_columns: Option<Vec<String>>,
    /// 0 disables the pre-screen.
    pub prefilter_k: usize,
    pub method: Method,
    pub methods: MethodConfigs,
    /// Selection cutoff on CMF rates; must be set explicitly for CMF.
    pub cutoff: Option<f64>,
    /// Not echoed in the report, so reports written to different
    /// directories stay identical.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub seed: u64,
    pub scree_svg: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            input: PathBuf::new(),
            x_column: String::new(),
            y_column: String::new(),
            covariate_columns: Vec::new(),
            mediator_columns: None,
            prefilter_k: 0,
            method: Method::Cmf,
            methods: MethodConfigs::default(),
            cutoff: None,
            out: PathBuf::from("medfilter-out"),
            seed: 0,
            scree_svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMediator {
    pub rank: usize,
    pub name: String,
    /// 0-based position among the input mediator columns.
    pub index: usize,
    pub rate: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_observations: usize,
    pub n_mediators_input: usize,
    pub n_mediators_analyzed: usize,
    pub convergence_fraction: Option<f64>,
    pub sweep_histogram: Option<Vec<u64>>,
    pub capped_evaluations: Option<u64>,
    /// Constant mediators left out of the search.
    pub dropped_columns: Vec<String>,
    pub hima_survivors: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub method: Method,
    pub selected: Vec<String>,
    pub ranked: Vec<RankedMediator>,
    pub diagnostics: Diagnostics,
    pub config: AnalysisConfig,
}

/// A numeric CSV with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CliError::io(path, e))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::io(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut seen = HashSet::new();
        if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
            return Err(CliError::Config(format!("duplicate column `{dup}` in {}", path.display())));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::io(path, e))?;
            for (j, field) in record.iter().enumerate() {
                let field = field.trim();
                let v: f64 = field.parse().map_err(|_| {
                    CliError::Config(format!(
                        "{}: row {}, column `{}`: `{field}` is not a number (missing values are not supported)",
                        path.display(),
                        row + 2,
                        headers[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(CliError::Config(format!(
                        "{}: row {}, column `{}` is not finite",
                        path.display(),
                        row + 2,
                        headers[j]
                    )));
                }
                columns[j].push(v);
            }
        }
        Ok(Table { headers, columns })
    }

    fn index_of(&self, name: &str, role: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{role} column `{name}` not found in input")))
    }
}

/// Resolves the named columns into a dataset plus covariate matrix.
fn assemble(cfg: &AnalysisConfig, table: &Table) -> CliResult<(Dataset, Matrix)> {
    if cfg.x_column.is_empty() || cfg.y_column.is_empty() {
        return Err(CliError::Config("exposure and outcome columns must be named".into()));
    }
    let xi = table.index_of(&cfg.x_column, "exposure")?;
    let yi = table.index_of(&cfg.y_column, "outcome")?;
    let cov_idx = cfg
        .covariate_columns
        .iter()
        .map(|c| table.index_of(c, "covariate"))
        .collect::<CliResult<Vec<_>>>()?;
    let mut used: HashSet<usize> = HashSet::new();
    for &i in [xi, yi].iter().chain(&cov_idx) {
        if !used.insert(i) {
            return Err(CliError::Config(format!(
                "column `{}` is used in more than one role",
                table.headers[i]
            )));
        }
    }
    let med_idx: Vec<usize> = match &cfg.mediator_columns {
        Some(names) => {
            let idx = names
                .iter()
                .map(|c| table.index_of(c, "mediator"))
                .collect::<CliResult<Vec<_>>>()?;
            for &i in &idx {
                if !used.insert(i) {
                    return Err(CliError::Config(format!(
                        "column `{}` is used in more than one role",
                        table.headers[i]
                    )));
                }
            }
            idx
        }
        None => (0..table.headers.len()).filter(|i| !used.contains(i)).collect(),
    };
    if med_idx.is_empty() {
        return Err(CliError::Config("no mediator columns".into()));
    }
    let n = table.columns[xi].len();
    let m = Matrix::from_columns(n, &med_idx.iter().map(|&i| table.columns[i].clone()).collect::<Vec<_>>())?;
    let covariates = Matrix::from_columns(n, &cov_idx.iter().map(|&i| table.columns[i].clone()).collect::<Vec<_>>())?;
    let names = med_idx.iter().map(|&i| table.headers[i].clone()).collect();
    let data = Dataset::new(table.columns[xi].clone(), m, table.columns[yi].clone(), names)?;
    Ok((data, covariates))
}

/// Runs the pipeline and writes `report.json`, `rates.csv` and `scree.csv`
/// (plus `scree.svg` when asked) into `cfg.out`.
pub fn run_analysis(cfg: &AnalysisConfig) -> CliResult<Report> {
    let table = Table::read(&cfg.input)?;
    let report = analyze_table(cfg, &table)?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    write_json(&cfg.out.join("report.json"), &report)?;
    let rows: Vec<Vec<String>> = report
        .ranked
        .iter()
        .map(|r| {
            vec![
                r.rank.to_string(),
                r.name.clone(),
                r.index.to_string(),
                r.rate.to_string(),
                r.selected.to_string(),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("rates.csv"), &["rank", "name", "index", "rate", "selected"], &rows)?;
    let scree: Vec<Vec<String>> = report
        .ranked
        .iter()
        .map(|r| vec![r.rank.to_string(), r.rate.to_string()])
        .collect();
    write_csv(&cfg.out.join("scree.csv"), &["rank", "rate"], &scree)?;
    if cfg.scree_svg {
        let points: Vec<f64> = report.ranked.iter().map(|r| r.rate).collect();
        write_scree_svg(&cfg.out.join("scree.svg"), &points, cfg.cutoff)?;
    }
    Ok(report)
}

/// The pipeline without file output.
pub fn analyze_table(cfg: &AnalysisConfig, table: &Table) -> CliResult<Report> {
    let (data, covariates) = assemble(cfg, table)?;
    let n_input = data.n_mediators();
    let data = residualize_covariates(&data, &covariates)?;
    let (data, kept) = if cfg.prefilter_k > 0 && cfg.prefilter_k < n_input {
        prefilter_topk(&data, cfg.prefilter_k)?
    } else if cfg.prefilter_k > n_input {
        return Err(CliError::Config(format!(
            "prefilter size {} exceeds the {n_input} mediators",
            cfg.prefilter_k
        )));
    } else {
        (data, (0..n_input).collect())
    };

    let mut diagnostics = Diagnostics {
        n_observations: data.n(),
        n_mediators_input: n_input,
        n_mediators_analyzed: data.n_mediators(),
        convergence_fraction: None,
        sweep_histogram: None,
        capped_evaluations: None,
        dropped_columns: Vec::new(),
        hima_survivors: None,
    };
    let rates: Vec<f64> = match cfg.method {
        Method::Cmf => {
            let cutoff = cfg
                .cutoff
                .ok_or_else(|| CliError::Config("CMF needs an explicit selection cutoff (--cutoff)".into()))?;
            let cmf_cfg = medfilter::CmfConfig {
                seed: cfg.seed,
                cutoff,
                ..cfg.methods.cmf.clone()
            };
            let res = cmf_outer(&data.x, &data.m, &data.y, &cmf_cfg)?;
            diagnostics.convergence_fraction = Some(res.convergence_fraction);
            diagnostics.sweep_histogram = Some(res.sweep_histogram.clone());
            diagnostics.capped_evaluations = Some(res.capped_evaluations);
            diagnostics.dropped_columns = res
                .excluded_columns
                .iter()
                .map(|&j| data.mediator_names[j].clone())
                .collect();
            res.rates
        }
        Method::Filter => {
            let sel = filter_method(&data.x, &data.m, &data.y, &cfg.methods.filter)?;
            indicator(&sel, data.n_mediators())
        }
        Method::Hima => {
            let hcfg = medfilter::HimaConfig {
                seed: cfg.seed,
                ..cfg.methods.hima.clone()
            };
            let res = hima(&data.x, &data.m, &data.y, &hcfg)?;
            diagnostics.hima_survivors = Some(res.survivors.iter().map(|&j| data.mediator_names[j].clone()).collect());
            indicator(&res.selected, data.n_mediators())
        }
    };
    let cutoff = match cfg.method {
        Method::Cmf => cfg.cutoff.unwrap_or(0.5),
        _ => 0.5,
    };
    let (ranking, selected) = rank_and_cut(&rates, cutoff);
    let selected_set: HashSet<usize> = selected.iter().copied().collect();
    let ranked = ranking
        .iter()
        .enumerate()
        .map(|(r, &j)| RankedMediator {
            rank: r + 1,
            name: data.mediator_names[j].clone(),
            index: kept[j],
            rate: rates[j],
            selected: selected_set.contains(&j),
        })
        .collect();
    Ok(Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        method: cfg.method,
        selected: selected.iter().map(|&j| data.mediator_names[j].clone()).collect(),
        ranked,
        diagnostics,
        config: cfg.clone(),
    })
}

fn indicator(selected: &[usize], p: usize) -> Vec<f64> {
    let mut v = vec![0.0; p];
    for &j in selected {
        v[j] = 1.0;
    }
    v
}
