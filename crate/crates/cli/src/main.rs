//! `musobench`: corpus generation, ground-truth checks, benchmark runs,
//! scoring and reporting.
//!
//! Exit codes: 0 success, 1 usage, 2 data integrity, 3 endpoint failure.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use musobench::corpus::TaskKind;
use musobench::harness::Strategy;
use musobench::protocol::Paradigm;

#[derive(Debug, Parser)]
#[command(name = "musobench", version, about = "Multi-solution reasoning benchmark toolkit")]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for `run`.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Use a scripted endpoint: a builtin persona name or a persona JSON file.
    #[arg(long, global = true)]
    pub mock: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a stratified corpus.
    Gen(GenArgs),
    /// Recompute ground truth and compare it with the corpus.
    Solve(SolveArgs),
    /// Query an endpoint for every corpus item.
    Run(RunArgs),
    /// Score a run directory against its corpus.
    Score(ScoreArgs),
    /// Emit comparison tables for one or more runs.
    Report(ReportArgs),
    /// Worked examples, oracle cross-check and metric goldens.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_task)]
    pub task: Option<TaskKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Items per complexity level.
    #[arg(long)]
    pub quota: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, alias = "in")]
    pub corpus: PathBuf,
    /// Also compare against exhaustive enumeration.
    #[arg(long)]
    pub check_brute_force: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    /// Self-consistency path count.
    #[arg(long)]
    pub n: Option<u32>,
    /// Reflection checkpoints, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u32>>,
    /// Run once per temperature into `temp-<t>` subdirectories.
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_paradigm)]
    pub paradigm: Option<Paradigm>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Ask the model to re-check its answer.
    #[arg(long)]
    pub recheck: bool,
    /// Ask the model to look for further solutions.
    #[arg(long)]
    pub explore: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Scored directories, or run directories when `--corpus` is given.
    #[arg(long, value_delimiter = ',', required = true)]
    pub runs: Vec<PathBuf>,
    /// Per-item movement from the first run to the second.
    #[arg(long)]
    pub paired: bool,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1000)]
    pub subsetsum: u64,
    #[arg(long, default_value_t = 500)]
    pub timetabling: u64,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "timetabling" => Ok(TaskKind::TimeTabling),
        "subsetsum" => Ok(TaskKind::SubsetSum),
        other => Err(format!("unknown task `{other}` (timetabling or subsetsum)")),
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: musobench::harness::HarnessError| e.to_string())
}

fn parse_paradigm(s: &str) -> Result<Paradigm, String> {
    s.parse().map_err(|e: musobench::protocol::ProtocolError| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { failure::USAGE } else { 0 });
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("musobench: {f}");
            ExitCode::from(f.code)
        }
    }
}
