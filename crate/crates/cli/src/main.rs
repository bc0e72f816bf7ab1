//! `paretolab`: run the game service, simulate agents, analyze traces and
//! write reports.
//!
//! Every option can also come from a TOML file given with `--config`; flags
//! win over the file. Exit codes: 0 success, 1 input error, 2 runtime error.

mod config;

use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paretolab::analysis::{read_decision_table, write_decision_table, write_decision_table_wide};
use paretolab::service::log::{export_traces, write_traces, TraceFilter};
use paretolab::service::{http, SessionStore};
use paretolab::testbed::list_problems;
use paretolab::{analyze_traces, simulate_agents, AgentConfig, AgentPolicy, AnalysisConfig, FitOptions};

use crate::config::{pick, CliError, FileConfig, Settings};

#[derive(Parser, Debug)]
#[command(
    name = "paretolab",
    version,
    about = "Pareto-rationality analysis of sequential search traces"
)]
struct Cli {
    /// TOML file with default option values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Serve the game HTTP API.
    Serve(ServeArgs),
    /// Run synthetic agents and write their traces as a click log.
    Simulate(SimulateArgs),
    /// Build the decision table from a click log.
    Analyze(AnalyzeArgs),
    /// Aggregate a decision table into counts, run lengths and per-problem summaries.
    Report(ReportArgs),
    /// Print the problem catalog as JSON.
    Problems,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    host: Option<String>,
    /// Click log path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Comma-separated problem ids, or `all`.
    #[arg(long)]
    problems: Option<String>,
    /// Comma-separated policies: ei, pi, ucb, thompson, greedy, random.
    #[arg(long)]
    policy: Option<String>,
    /// Agents per policy.
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    /// Candidate lattice, e.g. `30x30`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Click log to analyze.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Decision table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-kernel table here.
    #[arg(long)]
    wide: Option<PathBuf>,
    #[arg(long)]
    problems: Option<String>,
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long)]
    measures: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    normalize: Option<bool>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Click log the table was built from.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Decision table CSV.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    measures: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
}

fn required(v: Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required")))
}

fn serve(args: ServeArgs, file: &FileConfig) -> Result<(), CliError> {
    let port = pick(args.port, file.port, 8080);
    let host = pick(args.host, file.host.clone(), "127.0.0.1".to_string());
    let log = required(args.out.or(file.out.clone()), "out")?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Input(format!("bad address {host}:{port}: {e}")))?;
    let store = SessionStore::open(&log)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("listening on http://{local}");
        std::io::stdout().flush().ok();
        let shutdown = async {
            tokio::signal::ctrl_c().await.ok();
        };
        http::serve_on(listener, store, shutdown).await?;
        Ok(())
    })
}

fn simulate(args: SimulateArgs, file: &FileConfig) -> Result<(), CliError> {
    let s = Settings::resolve_simulate(&args.problems, &args.policy, &args.grid, file)?;
    let agents = pick(args.agents, file.agents, 14);
    let seed = pick(args.seed, file.seed, 0);
    let beta = pick(args.beta, file.beta, 3.0);
    let xi = pick(args.xi, file.xi, 0.0);
    let out = required(args.out.or(file.out.clone()), "out")?;
    let config = AgentConfig {
        budget: pick(args.budget, file.budget, 20),
        n_init: pick(args.n_init, file.n_init, 3),
        grid: s.grid,
        ..AgentConfig::default()
    };
    let policies: Vec<AgentPolicy> = s
        .policies
        .iter()
        .map(|&kind| AgentPolicy {
            beta,
            xi,
            ..AgentPolicy::new(kind, 0)
        })
        .collect();
    let traces = simulate_agents(&s.problems, &policies, agents, seed, &config)?;
    write_traces(&out, &traces)?;
    let clicks: usize = traces.iter().map(|t| t.len()).sum();
    println!("wrote {} traces, {clicks} clicks to {}", traces.len(), out.display());
    Ok(())
}

fn analyze(args: AnalyzeArgs, file: &FileConfig) -> Result<(), CliError> {
    let input = required(args.input.or(file.input.clone()), "in")?;
    let out = required(args.out.or(file.out.clone()), "out")?;
    let s = Settings::resolve_analyze(&args.kernels, &args.measures, &args.grid, file)?;
    let mut traces = export_traces(&input, &TraceFilter::default())?;
    if let Some(list) = args.problems.or(file.problems.clone()) {
        let keep = config::parse_problems(&list)?;
        traces.retain(|t| keep.iter().any(|p| p.id.as_str() == t.problem_id));
    }
    if traces.is_empty() {
        return Err(CliError::Input(format!("no traces in {}", input.display())));
    }
    let config = AnalysisConfig {
        kernels: s.kernels,
        measures: s.measures,
        grid: s.grid,
        threshold: pick(args.threshold, file.threshold, 1e-4),
        normalize: pick(args.normalize, file.normalize, true),
        n_init: pick(args.n_init, file.n_init, 3),
        fit: FitOptions {
            seed: pick(args.seed, file.seed, 0),
            ..FitOptions::default()
        },
    };
    let rows = analyze_traces(&traces, &config)?;
    write_decision_table(&rows, File::create(&out)?)?;
    if let Some(wide) = args.wide {
        write_decision_table_wide(&rows, File::create(wide)?)?;
    }
    let failed = rows.iter().filter(|r| r.min_dist.is_none()).count();
    println!(
        "analyzed {} traces: {} rows ({failed} without distance) -> {}",
        traces.len(),
        rows.len(),
        out.display()
    );
    Ok(())
}

fn report(args: ReportArgs, file: &FileConfig) -> Result<(), CliError> {
    let input = required(args.input.or(file.input.clone()), "in")?;
    let table = required(args.table.or(file.table.clone()), "table")?;
    let out = required(args.out.or(file.out.clone()), "out")?;
    let measures = config::parse_measures(&pick(args.measures, file.measures.clone(), "all".into()))?;
    let threshold = pick(args.threshold, file.threshold, 1e-4);
    let rows = read_decision_table(open(&table)?)?;
    let traces = export_traces(&input, &TraceFilter::default())?;
    let files = paretolab::analysis::write_report(&out, &rows, &traces, &measures, threshold)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

fn problems() -> Result<(), CliError> {
    let catalog: Vec<_> = list_problems().iter().map(|p| p.descriptor()).collect();
    let json = serde_json::to_string_pretty(&catalog).map_err(|e| CliError::Runtime(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{json}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Serve(a) => serve(a, &file),
        Command::Simulate(a) => simulate(a, &file),
        Command::Analyze(a) => analyze(a, &file),
        Command::Report(a) => report(a, &file),
        Command::Problems => problems(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
