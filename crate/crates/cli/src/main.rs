//! `qsimul`: runs measurement-theory scenarios and randomized property sweeps.

mod error;
mod ops;
mod report;
mod runner;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qsimul_core::sweep::{run_sweep, SweepConfig, SweepKind};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "qsimul", version, about = "State-dependent measurement scenarios and property sweeps")]
struct Cli {
    /// Rendering of the report on stdout.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the tasks of a scenario file in order.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "QSIMUL_SEED")]
        seed: Option<u64>,
        /// Directory for report.json and CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized property suite.
    Sweep {
        #[arg(long, value_parser = parse_kind)]
        kind: SweepKind,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
        dims: Vec<usize>,
        #[arg(long, env = "QSIMUL_SEED", default_value_t = 0)]
        seed: u64,
        /// Directory for sweep.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<SweepKind, String> {
    s.parse().map_err(|e: qsimul_core::Error| e.to_string())
}

#[derive(Debug, Serialize)]
struct SweepOutput {
    #[serde(flatten)]
    report: qsimul_core::sweep::SweepReport,
    passed: bool,
    wall_time_ms: f64,
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn sweep(config: SweepConfig, format: Format, out: Option<&Path>) -> Result<bool> {
    let start = Instant::now();
    let report = run_sweep(&config)?;
    let output = SweepOutput { passed: report.passed(), report, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 };
    let json = serde_json::to_string_pretty(&output).expect("sweep report serializes") + "\n";
    if let Some(dir) = out {
        write_out(dir, "sweep.json", &json)?;
    }
    let r = &output.report;
    match format {
        Format::Json => print!("{json}"),
        Format::Csv => {
            println!("kind,count,dims,seed,violations,worst_residual,passed");
            let dims: Vec<String> = r.dims.iter().map(usize::to_string).collect();
            println!(
                "{},{},\"{}\",{},{},{:.16e},{}",
                r.kind,
                r.count,
                dims.join(","),
                r.seed,
                r.violations,
                r.worst_residual,
                output.passed
            );
        }
        Format::Table => {
            println!(
                "sweep {} count={} dims={:?} seed={}: {} violations, worst residual {:.3e} ({:.1} ms)",
                r.kind, r.count, r.dims, r.seed, r.violations, r.worst_residual, output.wall_time_ms
            );
            if !r.failing_instances.is_empty() {
                println!("failing instances: {:?}", r.failing_instances);
            }
        }
    }
    Ok(output.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { scenario, seed, out } => {
            let report = runner::run_scenario(&scenario, seed, out.as_deref())?;
            match cli.format {
                Format::Json => print!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
                Format::Table => print!("{}", report.to_table()),
            }
            Ok(report.passed)
        }
        Command::Sweep { kind, count, dims, seed, out } => {
            sweep(SweepConfig { kind, count, dims, seed }, cli.format, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qsimul: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
