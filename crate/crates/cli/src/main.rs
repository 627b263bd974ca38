//! `skillgauge`: simulations, sweeps, empirical runs and regressions.
//!
//! Every command computes all of its outputs before writing any of them, so a
//! failing command leaves no partial artifacts. Errors go to stderr as one
//! JSON line and map to exit codes 2 (configuration), 3 (data) and
//! 4 (numerical).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use skillgauge_core::error::ErrorKind;
use skillgauge_core::Error;

#[derive(Debug, Parser)]
#[command(name = "skillgauge", version, about = "Skill versus chance in fantasy cricket contests")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "SKILLGAUGE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Run one preset contest and write its metrics table.
    Simulate(SimulateArgs),
    /// Run a parameter sweep described by a JSON document.
    Sweep(SweepArgs),
    /// Run impact-player contests and their no-impact baselines.
    Impact(ImpactArgs),
    /// Simulate users on historical scorecards.
    Empirical(EmpiricalArgs),
    /// Fit an OLS model to a results table.
    Regress(RegressArgs),
    /// Generate a synthetic scorecard dataset.
    Fixtures(FixturesArgs),
    /// Plot a results table as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path [default: <out>.manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PopulationArgs {
    #[arg(long, default_value_t = 1000)]
    pub n_users: u32,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.04)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Dirichlet concentration; calibrated from n, δ and β when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 25.0)]
    pub entry_fee: f64,
    /// Platform commission in percent.
    #[arg(long, default_value_t = 20.0)]
    pub platform_cut: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// equi-mean, unequal-mean or unequal-mean-unequal-std.
    #[arg(long)]
    pub preset: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 100_000)]
    pub winprob_samples: usize,
    /// Log-space equicorrelation of team scores.
    #[arg(long, default_value_t = 0.4)]
    pub rho: f64,
    /// Keep only the first k teams of the preset.
    #[arg(long)]
    pub n_experts: Option<usize>,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scorecards for the empirical axes.
    #[arg(long, requires = "careers")]
    pub scorecards: Option<PathBuf>,
    #[arg(long, requires = "scorecards")]
    pub careers: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ImpactArgs {
    /// Team presets, comma separated; deviation cells are pooled across them.
    #[arg(long, value_delimiter = ',', default_value = "equi-mean,unequal-mean,unequal-mean-unequal-std")]
    pub teams: Vec<String>,
    /// IID, Different_mean or Different_mean_and_std.
    #[arg(long)]
    pub impact: String,
    /// Also run this impact preset and report the variance ratio against it.
    #[arg(long)]
    pub reference: Option<String>,
    /// Seed of the reference runs [default: same as --seed].
    #[arg(long)]
    pub reference_seed: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 100_000)]
    pub winprob_samples: usize,
    #[arg(long, default_value_t = 0.4)]
    pub rho: f64,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct EmpiricalArgs {
    #[arg(long)]
    pub scorecards: PathBuf,
    #[arg(long)]
    pub careers: PathBuf,
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of expert teams (2 to 4).
    #[arg(long = "experts", alias = "n-experts")]
    pub n_experts: Option<usize>,
    /// Prescribed common players shared by all expert teams.
    #[arg(long = "common", alias = "n-common")]
    pub n_common: Option<usize>,
    #[arg(long = "iters", alias = "iterations")]
    pub iterations: Option<usize>,
    /// Simulate only the last k matches; earlier ones serve as history.
    #[arg(long)]
    pub eval_matches: Option<usize>,
    /// Let users add an impact player to their team.
    #[arg(long, value_enum)]
    pub impact: Option<Switch>,
    /// One contest per strategy instead of a shared contest.
    #[arg(long)]
    pub separate_contests: bool,
    /// Write per-iteration selection counts as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args, Serialize)]
pub struct RegressArgs {
    /// Results CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Model formula, e.g. "gain ~ E + C + C2 + Vmu + Sigma2".
    #[arg(long)]
    pub model: String,
    /// Heteroskedasticity-robust (HC1) standard errors.
    #[arg(long)]
    pub robust: bool,
    /// Also cross-tabulate the response by two columns, e.g. "E,Cp".
    #[arg(long, value_delimiter = ',')]
    pub cross_tab: Option<Vec<String>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct FixturesArgs {
    #[arg(long, default_value_t = 30)]
    pub matches: usize,
    /// Total players; squads have 15 players each.
    #[arg(long, default_value_t = 120)]
    pub players: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "SYN")]
    pub tournament: String,
    /// Directory for scorecards.csv, careers.csv and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    /// Results CSV.
    pub input: PathBuf,
    /// X column [default: value, else the first column].
    #[arg(long)]
    pub x: Option<String>,
    /// Y columns, comma separated [default: mean_winnings_<i>].
    #[arg(long, value_delimiter = ',')]
    pub y: Option<Vec<String>>,
    #[arg(long)]
    pub title: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    exit_code: u8,
    message: String,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn report(kind: &str, code: u8, message: String) -> ExitCode {
    let line = ErrorLine {
        error: kind,
        exit_code: code,
        message: message.replace('\n', " "),
    };
    eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("config", 2, e.to_string().trim().to_string()),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report("config", 2, "--threads must be at least 1".into());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report("config", 2, format!("cannot start worker pool: {e}"));
        }
    }
    let args = manifest::replay_argv(&argv[1..]);
    match commands::run(&cli.command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (name, kind) = match e.kind() {
                ErrorKind::Config => ("config", ErrorKind::Config),
                ErrorKind::Data => ("data", ErrorKind::Data),
                ErrorKind::Numerical => ("numerical", ErrorKind::Numerical),
            };
            report(name, exit_code(kind), Error::to_string(&e))
        }
    }
}
