use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use medfilter::study::{Method, MethodConfigs};
use medfilter::TestKind;
use medfilter_cli::{run_analysis, run_simulation, AnalysisConfig, CliError, CliResult, SimulationRequest};

#[derive(Parser, Debug)]
#[command(name = "medfilter", version, about = "Exploratory mediator selection with the coordinate-wise mediation filter")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "MEDFILTER_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select mediators in a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Run a simulation condition and score the methods.
    Simulate(SimulateArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: medfilter::Error| e.to_string())
}

fn parse_test(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: medfilter::Error| e.to_string())
}

/// Options shared by both subcommands that tune the methods.
#[derive(Args, Debug, Default)]
struct MethodArgs {
    /// Random starts for CMF.
    #[arg(long)]
    starts: Option<usize>,
    /// Sweep limit per CMF start.
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Probability that a mediator is selected in a random start.
    #[arg(long)]
    p_start: Option<f64>,
    /// Significance level of the mediation decisions.
    #[arg(long)]
    alpha_level: Option<f64>,
    /// Decision test: sobel or joint.
    #[arg(long, value_parser = parse_test)]
    test: Option<TestKind>,
}

impl MethodArgs {
    fn apply(&self, c: &mut MethodConfigs) {
        if let Some(v) = self.starts {
            c.cmf.n_starts = v;
        }
        if let Some(v) = self.max_sweeps {
            c.cmf.max_sweeps = v;
        }
        if let Some(v) = self.p_start {
            c.cmf.p_start = v;
        }
        if let Some(v) = self.alpha_level {
            c.cmf.decision.alpha_level = v;
            c.filter.alpha_level = v;
            c.hima.alpha_level = v;
        }
        if let Some(v) = self.test {
            c.cmf.decision.kind = v;
            c.filter.kind = v;
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Exposure column.
    #[arg(long)]
    x: Option<String>,
    /// Outcome column.
    #[arg(long)]
    y: Option<String>,
    /// Covariate columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Mediator columns; defaults to every remaining column.
    #[arg(long, value_delimiter = ',')]
    mediators: Option<Vec<String>>,
    /// Keep only the k mediators with the largest |corr(x,m) corr(m,y)|; 0 keeps all.
    #[arg(long)]
    prefilter_k: Option<usize>,
    /// cmf, filter or hima.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Rate at or above which CMF selects a mediator.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Seed for the CMF starts and HIMA folds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write scree.svg.
    #[arg(long)]
    scree_svg: bool,
    #[command(flatten)]
    tuning: MethodArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Shipped condition: suppression, noise-alpha, noise-beta, combined, highdim.
    name: Option<String>,
    /// JSON condition specification instead of a shipped name.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Methods to run, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "cmf,filter,hima")]
    methods: Vec<Method>,
    /// Replicates; defaults to the condition's own count.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "medfilter-sim")]
    out: PathBuf,
    /// JSON file with method configurations; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: MethodArgs,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let mut cfg: AnalysisConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => AnalysisConfig::default(),
    };
    if let Some(v) = args.input {
        cfg.input = v;
    }
    if let Some(v) = args.x {
        cfg.x_column = v;
    }
    if let Some(v) = args.y {
        cfg.y_column = v;
    }
    if let Some(v) = args.covariates {
        cfg.covariate_columns = v;
    }
    if let Some(v) = args.mediators {
        cfg.mediator_columns = Some(v);
    }
    if let Some(v) = args.prefilter_k {
        cfg.prefilter_k = v;
    }
    if let Some(v) = args.method {
        cfg.method = v;
    }
    if let Some(v) = args.cutoff {
        cfg.cutoff = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.out {
        cfg.out = v;
    }
    cfg.scree_svg |= args.scree_svg;
    args.tuning.apply(&mut cfg.methods);
    if cfg.input.as_os_str().is_empty() {
        return Err(CliError::Config("no input file given (--input)".into()));
    }
    let report = run_analysis(&cfg)?;
    println!(
        "selected {} of {} mediators: {}",
        report.selected.len(),
        report.diagnostics.n_mediators_analyzed,
        report.selected.join(", ")
    );
    println!("results written to {}", cfg.out.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let mut configs: MethodConfigs = match &args.config {
        Some(p) => read_json(p)?,
        None => MethodConfigs::default(),
    };
    args.tuning.apply(&mut configs);
    let req = SimulationRequest {
        condition: args.name,
        spec: args.spec,
        methods: args.methods,
        reps: args.reps,
        seed: args.seed,
        configs,
        out: args.out,
    };
    let output = run_simulation(&req)?;
    for t in &output.tables {
        let power: Vec<String> = t.power.iter().map(|v| format!("{v:.2}")).collect();
        println!(
            "{:<7} power [{}]  fpr {:.5}  ppv {:.4}  ({} replicates, {} failed)",
            t.method.map_or("mixed", |m| m.name()),
            power.join(", "),
            t.fpr,
            t.ppv,
            t.replicates,
            t.failed
        );
    }
    println!("results written to {}", req.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(s) => simulate(s),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
