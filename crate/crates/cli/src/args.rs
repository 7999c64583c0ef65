use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use teamrep_core::bench::AttachmentModel;
use teamrep_core::replacement::{Algorithm, Decay};

#[derive(Debug, Parser)]
#[command(
    name = "teamrep",
    version,
    about = "Recommend replacements for a departing team member"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a network, then print its size.
    #[command(visible_alias = "stats")]
    Ingest(NetworkArgs),
    /// Rank replacement candidates for a departing member.
    Recommend(RecommendArgs),
    /// Before/after team graphs for one candidate.
    Whatif(WhatIfArgs),
    /// Kernel value between two teams of equal size.
    Kernel(KernelArgs),
    /// Run a timing scenario and emit a JSONL report.
    Bench(BenchArgs),
    /// Print reports previously written by `bench`.
    Report(ReportArgs),
    /// Write a seeded synthetic network in the input formats.
    Generate(GenerateArgs),
    /// Serve the HTTP API over one network.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Edges file: `src<TAB>dst<TAB>weight` per line.
    #[arg(long)]
    pub network: PathBuf,
    /// Skills file: `node<TAB>skill<TAB>weight` per line.
    #[arg(long)]
    pub skills: PathBuf,
    /// Teams file: `team_id<TAB>member,member,...` per line.
    #[arg(long)]
    pub teams: Option<PathBuf>,
}

/// Network files for local evaluation, or the URL of a running service.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long, required_unless_present = "server", requires = "skills")]
    pub network: Option<PathBuf>,
    #[arg(long, requires = "network")]
    pub skills: Option<PathBuf>,
    #[arg(long, requires = "network")]
    pub teams: Option<PathBuf>,
    /// Send the query to this service instead of evaluating locally.
    #[arg(long, conflicts_with_all = ["network", "skills", "teams"])]
    pub server: Option<String>,
}

#[derive(Debug, Clone, Args)]
#[group(skip)]
#[command(group = ArgGroup::new("team_choice").required(true).multiple(false))]
pub struct QueryArgs {
    /// Team members as a comma list of node ids.
    #[arg(long, value_delimiter = ',', group = "team_choice")]
    pub team: Vec<String>,
    /// Team id from the teams file.
    #[arg(long, group = "team_choice")]
    pub team_id: Option<String>,
    /// The departing member.
    #[arg(long)]
    pub leaving: String,
    /// basic, exact (fast_exact) or approx (fast_approx).
    #[arg(long, default_value = "exact", value_parser = parse_algorithm)]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,
    /// Eigenpairs kept by the approximate evaluator.
    #[arg(long)]
    pub rank_r: Option<usize>,
    /// Decay constant c, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_decay)]
    pub decay: DecayArg,
}

#[derive(Debug, Clone, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub query: QueryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WhatIfArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    /// The replacement to preview.
    #[arg(long)]
    pub candidate: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelEval {
    Direct,
    Series,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// First team, comma list of node ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub team_a: Vec<String>,
    /// Second team, same size as the first.
    #[arg(long, value_delimiter = ',', required = true)]
    pub team_b: Vec<String>,
    #[arg(long, value_enum, default_value_t = KernelEval::Direct)]
    pub method: KernelEval,
    #[arg(long, default_value = "auto", value_parser = parse_decay)]
    pub decay: DecayArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Pruning,
    #[value(name = "team_size_sweep", alias = "team-size-sweep")]
    TeamSizeSweep,
    Scalability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "erdos_renyi", alias = "er")]
    ErdosRenyi,
    Preferential,
}

impl From<ModelArg> for AttachmentModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::ErdosRenyi => AttachmentModel::ErdosRenyi,
            ModelArg::Preferential => AttachmentModel::Preferential,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10000)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::ErdosRenyi)]
    pub model: ModelArg,
    /// Number of distinct skills.
    #[arg(long, default_value_t = 20)]
    pub l: usize,
    #[arg(long, default_value_t = 3.0)]
    pub skills_per_node: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Benchmark on these files instead of a synthetic network.
    #[arg(long, requires = "skills")]
    pub network: Option<PathBuf>,
    #[arg(long, requires = "network")]
    pub skills: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Score candidates on all cores.
    #[arg(long)]
    pub parallel: bool,
    /// Team size for the pruning and scalability scenarios.
    #[arg(long, default_value_t = 10)]
    pub team_size: usize,
    /// Number of teams in the pruning scenario.
    #[arg(long, default_value_t = 3)]
    pub teams_count: usize,
    /// Team sizes for the sweep.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    pub sizes: Vec<usize>,
    /// Edge fractions for the scalability scenario.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub rank_r: Option<usize>,
    /// Append the JSONL report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// JSONL files written by `bench`.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Teams to pick for the teams file.
    #[arg(long, default_value_t = 3)]
    pub teams_count: usize,
    #[arg(long, default_value_t = 5)]
    pub team_size: usize,
    /// Directory receiving edges.tsv, skills.tsv and teams.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Port to listen on; 0 picks a free one.
    #[arg(long, default_value_t = 8080)]
    pub serve_port: u16,
    /// Allowed CORS origin, repeatable. Any origin when absent.
    #[arg(long)]
    pub cors_origin: Vec<String>,
    /// Directory of static UI assets to serve.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// The decay flag as typed, kept verbatim for the wire request.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayArg {
    pub text: String,
    pub value: Decay,
}

fn parse_decay(s: &str) -> Result<DecayArg, String> {
    let value = s.parse::<Decay>().map_err(|e| e.to_string())?;
    Ok(DecayArg {
        text: s.to_owned(),
        value,
    })
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}
