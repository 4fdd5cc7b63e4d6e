use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use greedyjump::sources::{parse_count, parse_scalar};
use serde::{Deserialize, Serialize};

fn scalar(s: &str) -> Result<f64, String> {
    parse_scalar(s).map_err(|e| e.to_string())
}

fn count(s: &str) -> Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

fn small(s: &str) -> Result<usize, String> {
    count(s).and_then(|n| usize::try_from(n).map_err(|e| e.to_string()))
}

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "greedyjump", version, about = "Greedy sign-choice walks x_n = x_{n-1} +- v_n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random stream; overrides GREEDYJUMP_SEED.
    #[arg(long, global = true, env = "GREEDYJUMP_SEED", value_parser = count)]
    pub seed: Option<u64>,

    /// Directory for data files and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run the greedy walk for a direction source.
    Simulate(SimulateArgs),
    /// Monte Carlo histogram of the radial chain.
    Invariant(InvariantArgs),
    /// Fixed-point solve for the stationary radial density.
    Solve(SolveArgs),
    /// Transition density of the radial chain.
    Kernel(KernelArgs),
    /// Periodicity of a van der Corput start.
    VdcPeriodic(VdcPeriodicArgs),
    /// Raster of periodic starts.
    VdcRegion(VdcRegionArgs),
    /// Steps until a van der Corput run enters a ball.
    Hitting(HittingArgs),
    /// Base 2 start whose first pairs all return.
    Stall(StallArgs),
    /// First broken block from (eps, M/2) in an even base.
    Stopcycle(StopcycleArgs),
    /// Greedy signs in the harmonic series.
    Harmonic(HarmonicArgs),
    /// Run the acceptance battery.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Invariant(_) => "invariant",
            Command::Solve(_) => "solve",
            Command::Kernel(_) => "kernel",
            Command::VdcPeriodic(_) => "vdc-periodic",
            Command::VdcRegion(_) => "vdc-region",
            Command::Hitting(_) => "hitting",
            Command::Stall(_) => "stall",
            Command::Stopcycle(_) => "stopcycle",
            Command::Harmonic(_) => "harmonic",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieArg {
    Halt,
    ChoosePlus,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Source spec such as `vdc:b=2` or `polyphase:c=sqrt2:p=3`.
    #[arg(long)]
    pub source: String,
    /// Comma-separated start point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = scalar)]
    pub start: Vec<f64>,
    #[arg(long, value_parser = count)]
    pub n: u64,
    /// Keep norms and signs only (the default above 10^6 steps).
    #[arg(long, conflicts_with = "full")]
    pub norms_only: bool,
    /// Keep every state regardless of size.
    #[arg(long)]
    pub full: bool,
    /// Full states kept by reservoir sampling in norms-only mode.
    #[arg(long, default_value = "10000", value_parser = small)]
    pub reservoir: usize,
    #[arg(long, value_enum, default_value = "halt")]
    pub tie: TieArg,
    #[arg(long, default_value = "1e-12", value_parser = scalar)]
    pub tie_tol: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantArgs {
    #[arg(long)]
    pub d: usize,
    /// Samples kept after burn-in.
    #[arg(long, default_value = "1e6", value_parser = count)]
    pub steps: u64,
    #[arg(long, default_value = "1e4", value_parser = count)]
    pub burnin: u64,
    #[arg(long, default_value = "200", value_parser = small)]
    pub bins: usize,
    #[arg(long, default_value = "8", value_parser = small)]
    pub shards: usize,
    #[arg(long, value_parser = scalar)]
    pub r0: Option<f64>,
    #[arg(long, value_parser = scalar)]
    pub r_max: Option<f64>,
    /// Rates for the exponential moments, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = scalar)]
    pub alphas: Vec<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value = "2000", value_parser = small)]
    pub nodes: usize,
    #[arg(long, value_parser = scalar)]
    pub r_max: Option<f64>,
    #[arg(long, default_value = "500", value_parser = small)]
    pub max_iters: usize,
    #[arg(long, default_value = "1e-10", value_parser = scalar)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_parser = scalar)]
    pub x: f64,
    /// Evaluation points across the support.
    #[arg(long, default_value = "200", value_parser = small)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcPeriodicArgs {
    #[arg(long)]
    pub b: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = scalar)]
    pub start: Vec<f64>,
    #[arg(long, default_value = "100", value_parser = count)]
    pub cycles: u64,
    #[arg(long, default_value = "1e-9", value_parser = scalar)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcRegionArgs {
    #[arg(long)]
    pub b: u64,
    #[arg(long, default_value = "1000", value_parser = small)]
    pub resolution: usize,
    #[arg(long, default_value = "1", value_parser = scalar)]
    pub half_width: f64,
    #[arg(long, default_value = "150", value_parser = count)]
    pub steps: u64,
    #[arg(long, default_value = "1e-4", value_parser = scalar)]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingArgs {
    #[arg(long, default_value = "2")]
    pub b: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = scalar)]
    pub start: Vec<f64>,
    #[arg(long, default_value = "sqrt2", value_parser = scalar)]
    pub target: f64,
    #[arg(long, default_value = "1e7", value_parser = count)]
    pub max_steps: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallArgs {
    #[arg(long, value_parser = count)]
    pub n: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopcycleArgs {
    #[arg(long, default_value = "8")]
    pub b: u64,
    #[arg(long, value_parser = scalar)]
    pub eps: f64,
    /// Blocks simulated when looking for the first broken one.
    #[arg(long, default_value = "1e6", value_parser = count)]
    pub max_cycles: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicArgs {
    #[arg(long, value_parser = scalar)]
    pub target: f64,
    #[arg(long, value_parser = count)]
    pub n: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Smaller samples and wider tolerances.
    #[arg(long)]
    pub quick: bool,
    /// Criterion ids or groups (`radial`, `vdc`), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

/// Canonical command line: the subcommand, then every set option in
/// alphabetical order, then the seed. Parsing it gives back the same config.
pub fn canonical(command: &Command, seed: u64) -> String {
    let value = serde_json::to_value(command).expect("plain data");
    let (name, fields) = value
        .as_object()
        .and_then(|m| m.iter().next())
        .expect("externally tagged enum");
    let mut out = vec![name.clone()];
    if let Some(fields) = fields.as_object() {
        for (key, v) in fields {
            let flag = format!("--{}", key.replace('_', "-"));
            match v {
                serde_json::Value::Null | serde_json::Value::Bool(false) => {}
                serde_json::Value::Bool(true) => out.push(flag),
                serde_json::Value::Array(items) if items.is_empty() => {}
                serde_json::Value::Array(items) => {
                    out.push(flag);
                    out.push(items.iter().map(plain).collect::<Vec<_>>().join(","));
                }
                other => {
                    out.push(flag);
                    out.push(plain(other));
                }
            }
        }
    }
    out.push("--seed".into());
    out.push(seed.to_string());
    out.join(" ")
}

fn plain(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
