//! `ucbq` subcommands.
//!
//! Exit codes: 0 success, 2 user or input error, 3 internal invariant
//! violation.

pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use ucbq_core::harness::{
    read_csv, regret_summary, write_aggregate_csv, write_raw_csv, Experiment, ExperimentConfig,
    HarnessError, RegretSummary, DEFAULT_PER_THRESHOLD,
};
use ucbq_core::{solve_optimal, EnvRecipe, MdpSpec};

#[derive(Debug, Parser)]
#[command(name = "ucbq", version, about = "Tabular UCB-Hoeffding Q-learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an MDP exactly and print V*_1.
    Solve(SolveArgs),
    /// Run an experiment config and write raw and aggregate CSVs.
    Run(RunArgs),
    /// Summarise regret from one or more CSVs.
    Compare(CompareArgs),
    /// Write an environment as MDP JSON.
    GenEnv(GenEnvArgs),
    /// Plot mean per-episode regret with 95% bands as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Recipe (gridworld3, chain:S=5,H=6, random:seed=7,S=3,A=2,H=3) or MDP JSON path.
    #[arg(long)]
    pub env: String,
    /// Write Q*/V* JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for raw.csv and aggregate.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Override num_runs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Override the episode budget K.
    #[arg(long = "K", alias = "episodes")]
    pub episodes: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Raw or aggregate CSVs; variants are pooled across files.
    #[arg(long, num_args = 1.., required = true)]
    pub csv: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PER_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct GenEnvArgs {
    #[arg(long)]
    pub env: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Trailing moving-average window applied before drawing.
    #[arg(long)]
    pub smooth: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 2.
    User(anyhow::Error),
    /// Broken invariant: exit 3.
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(e) | CliError::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Invariant(_) => CliError::Internal(e.into()),
            other => CliError::User(other.into()),
        }
    }
}

fn user(e: impl Into<anyhow::Error>) -> CliError {
    CliError::User(e.into())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Run(args) => cmd_run(&args, out),
        Command::Compare(args) => cmd_compare(&args, out),
        Command::GenEnv(args) => cmd_gen_env(&args, out),
        Command::Plot(args) => cmd_plot(&args, out),
    }
}

fn load_env(env: &str) -> Result<MdpSpec, CliError> {
    let recipe: EnvRecipe = env.parse().map_err(user)?;
    let spec = recipe.build().map_err(user)?;
    let report = spec.validate();
    if !report.is_ok() {
        return Err(user(anyhow!("MDP failed validation:\n{report}")));
    }
    Ok(spec)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(user)
}

fn fmt_vector(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_env(&args.env)?;
    let opt = solve_optimal(&spec);
    let io = |e: std::io::Error| user(e);
    writeln!(out, "V*_1 = {}", fmt_vector(opt.v_row(0))).map_err(io)?;
    for h in 0..spec.horizon() {
        for x in 0..spec.num_states() {
            writeln!(out, "Q*_{}(x{}, .) = {}", h + 1, x + 1, fmt_vector(opt.q_row(h, x))).map_err(io)?;
        }
    }
    if let Some(path) = &args.out {
        write_file(path, &opt.to_json())?;
    }
    Ok(())
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(runs) = args.runs {
        config.num_runs = runs;
    }
    if let Some(k) = args.episodes {
        config.episodes = k;
    }
    let experiment = Experiment::prepare(config)?;
    let results = experiment.run_all(args.jobs.max(1))?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(user)?;
    let raw = args.out_dir.join("raw.csv");
    let agg = args.out_dir.join("aggregate.csv");
    write_raw_csv(&results, &raw)?;
    let aggregates = results.aggregates()?;
    write_aggregate_csv(&aggregates, &agg)?;
    let summary = regret_summary(&aggregates, DEFAULT_PER_THRESHOLD)?;
    print_summary(&summary, out).map_err(user)?;
    writeln!(out, "wrote {} and {}", raw.display(), agg.display()).map_err(user)?;
    Ok(())
}

fn print_summary(summary: &RegretSummary, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<14} {:>8} {:>14} {:>12} {:>12}",
        "variant", "K", "total_regret", "ci95", "converged"
    )?;
    for row in &summary.rows {
        let ci = row
            .total_regret_ci
            .map_or_else(|| "-".to_string(), |c| format!("{c:.4}"));
        let conv = row
            .converged_episode
            .map_or_else(|| "never".to_string(), |k| k.to_string());
        writeln!(
            out,
            "{:<14} {:>8} {:>14.4} {:>12} {:>12}",
            row.variant.label(),
            row.episodes,
            row.total_regret_mean,
            ci,
            conv
        )?;
    }
    if summary.ordering.len() > 1 {
        let names: Vec<&str> = summary.ordering.iter().map(|v| v.label()).collect();
        writeln!(out, "ordering (lowest total regret first): {}", names.join(" < "))?;
    }
    writeln!(out, "converged = first episode after which mean PER stays below {}", summary.threshold)
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut aggregates = Vec::new();
    for path in &args.csv {
        let table = read_csv(path)?;
        if table.is_empty() {
            return Err(user(anyhow!("{} has no data rows", path.display())));
        }
        for agg in table.to_aggregates()? {
            if aggregates
                .iter()
                .any(|a: &ucbq_core::AggregateResult| a.variant == agg.variant)
            {
                return Err(user(anyhow!(
                    "variant {} appears in more than one input",
                    agg.variant
                )));
            }
            aggregates.push(agg);
        }
    }
    let summary = regret_summary(&aggregates, args.threshold)?;
    print_summary(&summary, out).map_err(user)
}

pub fn cmd_gen_env(args: &GenEnvArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_env(&args.env)?;
    let json = spec.to_json();
    match &args.out {
        Some(path) => write_file(path, &json),
        None => writeln!(out, "{json}").map_err(user),
    }
}

pub fn cmd_plot(args: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let table = read_csv(&args.csv)?;
    if table.is_empty() {
        return Err(user(anyhow!("{} has no data rows", args.csv.display())));
    }
    let window = args.smooth.unwrap_or(1);
    let series: Vec<svg::Series> = table
        .to_aggregates()?
        .into_iter()
        .map(|agg| svg::Series {
            label: agg.variant.label().to_string(),
            mean: svg::trailing_mean(&agg.mean_per, window),
            half_width: svg::trailing_mean(&agg.ci_half_width, window),
        })
        .collect();
    let title = if window > 1 {
        format!("Per-episode regret (trailing mean, window {window})")
    } else {
        "Per-episode regret".to_string()
    };
    let doc = svg::render(&title, "episode", "per-episode regret", &series);
    write_file(&args.out, &doc)?;
    writeln!(out, "wrote {}", args.out.display()).map_err(user)
}
