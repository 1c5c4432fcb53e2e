mod compare;
mod config;
mod describe;
mod error;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nds_pressure::emit::to_json;
use nds_pressure::par::with_workers;
use nds_pressure::verify::{run_suite, CRITERIA};

use crate::error::{CliError, Result};
use crate::tasks::{TaskOutput, Verdict};

const WORKERS_VAR: &str = "NDSP_WORKERS";

/// Finite-scale pressure estimators for nonautonomous dynamical systems.
///
/// Exit status: 0 success, 1 configuration error, 2 a tolerance check
/// failed, 3 the exact oracle ran out of budget. The worker count comes
/// from NDSP_WORKERS (default: all cores).
#[derive(Parser)]
#[command(name = "ndsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a JSON or TOML configuration.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a JSON summary of a system descriptor such as `cyclic-shift:L=8`.
    Describe { system: String },
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
        /// Write the full report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the greedy engines with the exact oracle on a configuration.
    OracleCompare {
        config: PathBuf,
        /// Exponents `s` to compare at.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn workers() -> Result<usize> {
    match std::env::var(WORKERS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::config(WORKERS_VAR, format!("expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        action: "create directory",
        path: dir.to_path_buf(),
        source,
    })
}

fn emit(outputs: &[TaskOutput], dir: &Path, json: bool, csv: bool) -> Result<()> {
    create_dir(dir)?;
    for o in outputs {
        if json {
            write_file(&dir.join(format!("{}.json", o.label)), &o.json)?;
        }
        if let (true, Some(text)) = (csv, &o.csv) {
            write_file(&dir.join(format!("{}.csv", o.label)), text)?;
        }
    }
    Ok(())
}

fn report(outputs: &[TaskOutput]) -> u8 {
    for o in outputs {
        println!("{:<24} {:<4} {}", o.label, o.verdict.as_str(), o.summary);
    }
    if outputs.iter().any(|o| o.verdict == Verdict::Fail) {
        2
    } else {
        0
    }
}

fn run(path: &Path, out: Option<PathBuf>, workers: usize) -> Result<u8> {
    let config = config::load(path)?;
    log::info!("{} tasks on {} with {workers} workers", config.tasks.len(), tasks::system_label(&config));
    let outputs = pool(workers, || tasks::run_all(&config))?;
    let dir = out.unwrap_or_else(|| config.output.dir.clone());
    emit(&outputs, &dir, config.output.json, config.output.csv)?;
    Ok(report(&outputs))
}

fn oracle_compare(path: &Path, s: Vec<f64>, out: Option<PathBuf>, workers: usize) -> Result<u8> {
    let config = config::load(path)?;
    let s = if s.is_empty() {
        config
            .tasks
            .iter()
            .find_map(|t| match t {
                config::Task::OracleCompare { s } => Some(s.clone()),
                _ => None,
            })
            .unwrap_or_else(|| vec![0.0])
    } else {
        s
    };
    let task = config::Task::OracleCompare { s };
    let output = pool(workers, || tasks::run_task(&config, 0, &task))?;
    let dir = out.unwrap_or_else(|| config.output.dir.clone());
    emit(std::slice::from_ref(&output), &dir, config.output.json, config.output.csv)?;
    Ok(report(std::slice::from_ref(&output)))
}

fn verify(criteria: Vec<usize>, out: Option<PathBuf>, workers: usize) -> Result<u8> {
    let ids: Vec<usize> = if criteria.is_empty() { (1..=CRITERIA).collect() } else { criteria };
    let suite = pool(workers, || run_suite(&ids, workers).map_err(|e| CliError::core("verify", e)))?;
    for c in &suite.criteria {
        println!("{}", c.summary());
        for f in c.failures().take(5) {
            println!("    {}: {} {:?} {} (tolerance {})", f.name, f.lhs, f.relation, f.rhs, f.tolerance);
        }
    }
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        write_file(&path, &to_json(&suite).map_err(|e| CliError::core("verify", e))?)?;
    }
    Ok(if suite.pass { 0 } else { 2 })
}

fn pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    with_workers(workers, f).map_err(|e| CliError::core(WORKERS_VAR, e))?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::args().skip(1).any(|a| a == "--seed" || a.starts_with("--seed=")) {
        eprintln!("error: --seed is reserved and not accepted; no computation in ndsp is randomized");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = workers().and_then(|w| match cli.command {
        Command::Run { config, out } => run(&config, out, w),
        Command::Describe { system } => describe::describe(&system).map(|text| {
            print!("{text}");
            0
        }),
        Command::Verify { criteria, out } => verify(criteria, out, w),
        Command::OracleCompare { config, s, out } => oracle_compare(&config, s, out, w),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
