//! `coldbench`: dataset generation, benchmark runs, cost analysis and tier
//! advice.
//!
//! Exit status is 0 on success, 1 when a run fails and 2 for usage or
//! configuration errors.

/// `println!` that returns an error on a closed stdout instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout(), $($arg)*)?
    }};
}

mod cost_cmd;
mod generate_cmd;
mod run_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "coldbench", version, about = "Cold storage archive benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset manifest.
    Generate(generate_cmd::GenerateArgs),
    /// Run a benchmark against a simulated backend.
    Run(run_cmd::RunArgs),
    /// Price an archive on one tier.
    Cost(cost_cmd::CostArgs),
    /// Rank every tier of a catalog by total cost.
    Advise(cost_cmd::AdviseArgs),
}

/// Archive shape shared by `cost` and `advise`.
#[derive(Args, Clone)]
pub struct ScenarioArgs {
    /// Archive size, e.g. 1PiB, 500TB, 2048 (plain numbers are GB).
    #[arg(long, default_value = "1PiB")]
    pub capacity: String,
    /// Months the data stays stored.
    #[arg(long, default_value_t = 12.0)]
    pub months: f64,
    /// Complete read-backs over the lifetime.
    #[arg(long, default_value_t = 1.0)]
    pub reads: f64,
    /// Object size; sets the GET request count.
    #[arg(long, default_value = "256MiB")]
    pub blob: String,
    /// Egress price in $/GB, applied by --migrate --egress.
    #[arg(long, default_value_t = 0.05)]
    pub egress_price: f64,
    /// Built-in catalog name or path to a catalog TOML file.
    #[arg(long, default_value = coldbench_core::cost::DEFAULT_CATALOG)]
    pub catalog: String,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

/// A problem with arguments or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn resolve_config_path(p: &std::path::Path) -> anyhow::Result<PathBuf> {
    if !p.is_file() {
        return Err(usage(format!("config file {} not found", p.display())));
    }
    Ok(p.to_path_buf())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("COLDBENCH_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate_cmd::run(a),
        Command::Run(a) => run_cmd::run(a),
        Command::Cost(a) => cost_cmd::cost(a),
        Command::Advise(a) => cost_cmd::advise(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_problem = e.downcast_ref::<UsageError>().is_some()
                || e.downcast_ref::<coldbench_core::config::RunError>()
                    .is_some_and(|r| r.is_config());
            ExitCode::from(if config_problem { 2 } else { 1 })
        }
    }
}
