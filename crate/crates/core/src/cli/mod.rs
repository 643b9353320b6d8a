//! Command-line front end: `validate`, `run` and `sweep`.
//!
//! Exit codes: 0 success, 1 validation error, 2 parse or I/O error, 3 a
//! conservation breach on a run without departure violations.

pub mod svg;
mod trace;

pub use trace::{trace_header, write_summary, write_trace, SummaryRow, SUMMARY_COLUMNS, TRACE_COLUMNS};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{conservation_audit, convergence_time};
use crate::engine::{self, EngineError, Scenario, ScenarioError};
use crate::network::validate_scenario;
use crate::Record;

#[derive(Debug, Parser)]
#[command(name = "oqac", version, about = "Quantized average consensus in open dynamic networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario against the model assumptions.
    Validate {
        scenario: PathBuf,
        /// Treat warnings as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Simulate a scenario and write one trace CSV per seed.
    Run {
        scenario: PathBuf,
        /// Seed to run; repeatable. Defaults to the scenario's seed.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the state and error charts as SVG.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        strict: bool,
    },
    /// Run many seeds and write a per-seed summary CSV.
    Sweep {
        scenario: PathBuf,
        /// Number of seeds, counting up from the scenario's seed.
        #[arg(long)]
        seeds: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

/// Resolved settings for `run` and `sweep`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub emit_svg: bool,
    pub strict: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario rejected by validation")]
    Rejected,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("conservation breach without departure violations (seed {seed}, step {step})")]
    Invariant { seed: u64, step: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Rejected | CliError::Engine(EngineError::Invalid(_)) => 1,
            CliError::Scenario(_) | CliError::Io { .. } | CliError::Csv(_) => 2,
            CliError::Engine(_) | CliError::Invariant { .. } => 3,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing the human-readable report to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { scenario, strict } => cmd_validate(&scenario, strict, out),
        Command::Run { scenario, seeds, out: dir, svg, strict } => {
            let config = RunConfig { scenario_path: scenario, output_dir: dir, seeds, emit_svg: svg, strict };
            cmd_run(&config, out).map(|_| 0)
        }
        Command::Sweep { scenario, seeds, out: dir, strict } => {
            let s = Scenario::load(&scenario)?;
            let config = RunConfig {
                scenario_path: scenario,
                output_dir: dir,
                seeds: (0..seeds).map(|i| s.seed.wrapping_add(i)).collect(),
                emit_svg: false,
                strict,
            };
            cmd_sweep(&config, out).map(|_| 0)
        }
    }
}

/// Prints findings; returns exit code 0 or 1.
pub fn cmd_validate(path: &Path, strict: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let scenario = Scenario::load(path)?;
    let report = validate_scenario(&scenario);
    let w = io_err("writing report");
    (|| -> std::io::Result<()> {
        writeln!(out, "scenario {}", path.display())?;
        for f in &report.findings {
            writeln!(out, "  {f}")?;
        }
        Ok(())
    })()
    .map_err(w)?;
    let ok = report.is_acceptable(strict);
    writeln!(out, "{}", if ok { "valid" } else { "invalid" }).map_err(io_err("writing report"))?;
    Ok(if ok { 0 } else { 1 })
}

fn load_checked(config: &RunConfig, out: &mut dyn Write) -> Result<Scenario, CliError> {
    let scenario = Scenario::load(&config.scenario_path)?;
    let report = validate_scenario(&scenario);
    for f in report.findings.iter().filter(|f| f.severity >= crate::network::Severity::Warning) {
        writeln!(out, "  {f}").map_err(io_err("writing report"))?;
    }
    if !report.is_acceptable(config.strict) {
        return Err(CliError::Rejected);
    }
    fs::create_dir_all(&config.output_dir)
        .map_err(io_err(format!("creating {}", config.output_dir.display())))?;
    Ok(scenario)
}

/// Fails with exit code 3 if a run without violations lost or created mass.
fn check_conservation(trace: &[Record], seed: u64) -> Result<(), CliError> {
    if trace.iter().any(|r| !r.violations.is_empty()) {
        return Ok(());
    }
    match conservation_audit(trace).into_iter().find(|i| !i.is_zero()) {
        Some(i) => Err(CliError::Invariant { seed, step: i.step }),
        None => Ok(()),
    }
}

/// Writes `trace_seed<S>.csv` (and SVG charts) per seed; returns the paths.
pub fn cmd_run(config: &RunConfig, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let scenario = load_checked(config, out)?;
    let seeds = if config.seeds.is_empty() { vec![scenario.seed] } else { config.seeds.clone() };
    let mut written = Vec::new();
    for seed in seeds {
        let trace = engine::run::<i64>(&scenario, seed)?;
        check_conservation(&trace, seed)?;
        let path = config.output_dir.join(format!("trace_seed{seed}.csv"));
        let file = fs::File::create(&path).map_err(io_err(format!("creating {}", path.display())))?;
        write_trace(&trace, scenario.n_total, std::io::BufWriter::new(file))?;
        written.push(path.clone());
        if config.emit_svg {
            for (name, body) in [
                (format!("states_seed{seed}.svg"), svg::state_chart(&trace)),
                (format!("error_seed{seed}.svg"), svg::error_chart(&trace)),
            ] {
                let p = config.output_dir.join(name);
                fs::write(&p, body).map_err(io_err(format!("writing {}", p.display())))?;
                written.push(p);
            }
        }
        let last = trace.last().expect("horizon yields at least one record");
        let violations: usize = trace.iter().map(|r| r.violations.len()).sum();
        writeln!(
            out,
            "seed {seed}: {} steps, final epsilon {}, {violations} violations -> {}",
            trace.len(),
            last.epsilon,
            path.display()
        )
        .map_err(io_err("writing report"))?;
    }
    Ok(written)
}

/// Summary for one seed, judged on the window from `k_prime` to the horizon.
pub fn summarize(scenario: &Scenario, trace: &[Record], seed: u64) -> SummaryRow {
    let audit = conservation_audit(trace);
    let max_y = audit.iter().map(|i| i.y.abs()).max().unwrap_or(0);
    let max_z = audit.iter().map(|i| i.z.abs()).max().unwrap_or(0);
    let report = convergence_time(trace, scenario.k_prime).ok();
    SummaryRow {
        seed,
        converged: report.as_ref().is_some_and(|r| r.converged),
        k0: report.as_ref().and_then(|r| r.k0),
        band_settled: report.as_ref().is_some_and(|r| r.band_settled()),
        band_k0: report.as_ref().and_then(|r| r.band_k0),
        final_epsilon: trace.last().map(|r| r.epsilon.to_string()).unwrap_or_default(),
        max_abs_y_imbalance: max_y.to_string(),
        max_abs_z_imbalance: max_z.to_string(),
        violations: trace.iter().map(|r| r.violations.len()).sum(),
    }
}

/// Writes `summary.csv`; returns the rows.
pub fn cmd_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<Vec<SummaryRow>, CliError> {
    let scenario = load_checked(config, out)?;
    let mut rows = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let trace = engine::run::<i64>(&scenario, seed)?;
        check_conservation(&trace, seed)?;
        rows.push(summarize(&scenario, &trace, seed));
    }
    let path = config.output_dir.join("summary.csv");
    let file = fs::File::create(&path).map_err(io_err(format!("creating {}", path.display())))?;
    write_summary(&rows, std::io::BufWriter::new(file))?;
    let settled = rows.iter().filter(|r| r.band_settled).count();
    writeln!(out, "{} seeds, {settled} settled in band -> {}", rows.len(), path.display())
        .map_err(io_err("writing report"))?;
    Ok(rows)
}
