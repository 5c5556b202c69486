use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use macromodule_cli::{compare, parse_scenario, render, simulate, sweep, write_outputs, CliError, Format, RunConfig};

/// Simulate and price data centers built from shipping-container modules.
#[derive(Debug, Parser)]
#[command(name = "mmsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the fleet simulation and report metrics and costs.
    Simulate(Common),
    /// Put conventional and modular builds (and redundancy strategies) side by side.
    Compare(Common),
    /// Re-run the scenario across values of one numeric field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted field path, e.g. `module.system.annual_failure_prob`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario's replication count.
    #[arg(long)]
    replications: Option<u32>,
    /// Directory for report.json, CSV tables and traces; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Number of replications whose event traces are written.
    #[arg(long, default_value_t = 1)]
    traces: usize,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (common, output) = match &cli.command {
        Command::Simulate(c) => {
            let loaded = parse_scenario(&c.scenario)?;
            (c, simulate(&loaded, &config(c))?)
        }
        Command::Compare(c) => {
            let loaded = parse_scenario(&c.scenario)?;
            (c, compare(&loaded, &config(c))?)
        }
        Command::Sweep { common, param, values } => {
            let loaded = parse_scenario(&common.scenario)?;
            (common, sweep(&loaded, &config(common), param, values)?)
        }
    };
    if let Some(dir) = &common.out {
        write_outputs(&output, dir)?;
    }
    Ok(render(&output.report, common.format))
}

fn config(c: &Common) -> RunConfig {
    RunConfig {
        seed: c.seed,
        replications: c.replications,
        traces: c.traces,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
