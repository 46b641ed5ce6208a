use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "cellia",
    version,
    about = "Interference alignment and DoF bounds for hexagonal cellular networks"
)]
pub struct Cli {
    /// Read the whole invocation from a JSON file instead of the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Export the interference graph, its decoding orientation and clusters.
    Graph(GraphArgs),
    /// Build a beamforming solution, certify it and measure rates.
    Run(RunArgs),
    /// Re-certify a dumped solution against dumped channels.
    Certify(CertifyArgs),
    /// Dual bound, LP value and optionally the integer optimum for one graph.
    Bound(BoundArgs),
    /// Triangle configurations and f_M values for M antennas.
    Table(TableArgs),
    /// Achieved DoF against the dual bound over several radii.
    Sweep(SweepArgs),
    /// Exhaustive integer optimum on a small graph.
    Oracle(OracleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Graph(_) => "graph",
            Command::Run(_) => "run",
            Command::Certify(_) => "certify",
            Command::Bound(_) => "bound",
            Command::Table(_) => "table",
            Command::Sweep(_) => "sweep",
            Command::Oracle(_) => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    #[default]
    Directed,
    AllNeighbors,
}

fn default_r() -> u32 {
    3
}
fn default_m() -> u32 {
    2
}
fn default_n() -> u32 {
    2
}
fn default_seed() -> u64 {
    42
}
fn default_powers() -> Vec<f64> {
    vec![1e3, 1e6]
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_r_list() -> Vec<u32> {
    (1..=6).collect()
}
fn default_oracle_r() -> u32 {
    1
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphArgs {
    #[arg(long = "r", default_value_t = default_r())]
    #[serde(default = "default_r")]
    pub r: u32,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long = "r", default_value_t = default_r())]
    #[serde(default = "default_r")]
    pub r: u32,
    #[arg(long = "m", default_value_t = default_m())]
    #[serde(default = "default_m")]
    pub m: u32,
    #[arg(long = "n", default_value_t = default_n())]
    #[serde(default = "default_n")]
    pub n: u32,
    #[arg(long, default_value_t = default_seed())]
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Transmit powers for the rate and slope measurement.
    #[arg(long, value_delimiter = ',', default_values_t = default_powers())]
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    /// Relative residual tolerance for the alignment certificate.
    #[arg(long, default_value_t = default_tolerance())]
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// `csv` emits the per-cell rate table instead of the JSON report.
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub format: Format,
    /// Also write the channel realization as JSON.
    #[arg(long, value_name = "FILE")]
    #[serde(default)]
    pub dump_channels: Option<PathBuf>,
    /// Also write the beamforming solution as JSON.
    #[arg(long, value_name = "FILE")]
    #[serde(default)]
    pub dump_solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyArgs {
    #[arg(long, value_name = "FILE")]
    pub channels: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub solution: PathBuf,
    #[arg(long, default_value_t = default_tolerance())]
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// `all-neighbors` ignores decode-and-cancel and counts every neighbour.
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub model: Model,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundArgs {
    #[arg(long = "r", default_value_t = default_r())]
    #[serde(default = "default_r")]
    pub r: u32,
    #[arg(long = "m", default_value_t = default_m())]
    #[serde(default = "default_m")]
    pub m: u32,
    /// Multiplier as an exact fraction such as `1/4`; defaults to the
    /// breakpoint minimiser.
    #[arg(long)]
    #[serde(default)]
    pub lambda: Option<String>,
    /// Also run the exhaustive integer search (small graphs only).
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableArgs {
    #[arg(long = "m", default_value_t = default_m())]
    #[serde(default = "default_m")]
    pub m: u32,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long = "r-list", value_delimiter = ',', default_values_t = default_r_list())]
    #[serde(default = "default_r_list")]
    pub r_list: Vec<u32>,
    #[arg(long = "m", default_value_t = default_m())]
    #[serde(default = "default_m")]
    pub m: u32,
    #[arg(long = "n", default_value_t = default_n())]
    #[serde(default = "default_n")]
    pub n: u32,
    #[arg(long, default_value_t = default_seed())]
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[arg(long, default_value_t = default_tolerance())]
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t)]
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleArgs {
    #[arg(long = "r", default_value_t = default_oracle_r())]
    #[serde(default = "default_oracle_r")]
    pub r: u32,
    #[arg(long = "m", default_value_t = default_m())]
    #[serde(default = "default_m")]
    pub m: u32,
}
