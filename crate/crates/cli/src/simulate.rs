//! Replication of the simulation conditions.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use medfilter::simgen::{SimCondition, SHIPPED_CONDITIONS};
use medfilter::study::{score_by_method, Method, MethodConfigs, MethodResult, ScoreTable};
use medfilter::run_condition;

use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json};

/// Per-mediator rate columns are written to the CSV table up to this many
/// mediators.
const RATE_COLUMNS_UP_TO: usize = 40;

#[derive(Debug, Clone)]
pub struct SimulationRequest {
    /// Shipped condition name, or `None` when `spec` is given.
    pub condition: Option<String>,
    pub spec: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub reps: Option<usize>,
    pub seed: u64,
    pub configs: MethodConfigs,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutput {
    pub tool_version: String,
    pub condition: SimCondition,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub configs: MethodConfigs,
    pub tables: Vec<ScoreTable>,
}

pub fn load_condition(req: &SimulationRequest) -> CliResult<SimCondition> {
    let mut cond = match (&req.condition, &req.spec) {
        (Some(name), None) => SimCondition::shipped(name).map_err(|_| {
            CliError::Config(format!(
                "unknown condition `{name}`; available: {}",
                SHIPPED_CONDITIONS.join(", ")
            ))
        })?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        _ => return Err(CliError::Config("give either a condition name or --spec, not both".into())),
    };
    if let Some(r) = req.reps {
        cond.n_reps = r;
    }
    cond.validate()?;
    Ok(cond)
}

/// Runs the condition, scores each method and writes `table.csv`,
/// `table.json` and `results.json` into `req.out`.
pub fn run_simulation(req: &SimulationRequest) -> CliResult<SimulationOutput> {
    if req.methods.is_empty() {
        return Err(CliError::Config("no methods given".into()));
    }
    let cond = load_condition(req)?;
    let results = run_condition(&cond, &req.methods, &req.configs, req.seed)?;
    let p = cond.n_mediators();
    let tables = if results.is_empty() {
        Vec::new()
    } else {
        score_by_method(&results, &req.methods, &cond.true_mediators, p)?
    };
    let output = SimulationOutput {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        condition: cond,
        seed: req.seed,
        methods: req.methods.clone(),
        configs: req.configs.clone(),
        tables,
    };
    fs::create_dir_all(&req.out).map_err(|e| CliError::io(&req.out, e))?;
    write_json(&req.out.join("table.json"), &output)?;
    write_table_csv(&req.out.join("table.csv"), &output)?;
    write_results(&req.out.join("results.json"), &results)?;
    Ok(output)
}

fn write_results(path: &Path, results: &[MethodResult]) -> CliResult<()> {
    write_json(path, &results)
}

fn write_table_csv(path: &Path, output: &SimulationOutput) -> CliResult<()> {
    let p = output.condition.n_mediators();
    let truth = &output.condition.true_mediators;
    let detailed = p <= RATE_COLUMNS_UP_TO;
    // Leading columns follow the published layout; `power` averages over the
    // true mediators.
    let mut header: Vec<String> = ["method", "replicates", "failed", "power", "fpr", "ppv"]
        .map(String::from)
        .to_vec();
    if detailed {
        header.extend(truth.iter().map(|t| format!("power_M{}", t + 1)));
        header.extend((1..=p).map(|j| format!("rate_M{j}")));
    }
    let rows: Vec<Vec<String>> = output
        .tables
        .iter()
        .map(|t| {
            let mean_power = if t.power.is_empty() {
                0.0
            } else {
                t.power.iter().sum::<f64>() / t.power.len() as f64
            };
            let mut row = vec![
                t.method.map_or("mixed".to_string(), |m| m.to_string()),
                t.replicates.to_string(),
                t.failed.to_string(),
                mean_power.to_string(),
                t.fpr.to_string(),
                t.ppv.to_string(),
            ];
            if detailed {
                row.extend(t.power.iter().map(|v| v.to_string()));
                row.extend(t.selection_rates.iter().map(|v| v.to_string()));
            }
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, &header_refs, &rows)
}
