//! `cachelab`: runs the toolkit's named experiment scenarios from TOML
//! configs and writes plot-ready CSV tables.
//!
//! Exit codes: 0 success, 2 validation failure, 3 runtime or I/O
//! failure (partial results kept with a `.partial` suffix).

mod config;
mod scenarios;
mod table;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use table::{Metadata, ResultTable};

/// Default output directory when neither `--out` nor the environment
/// variable is set.
const DEFAULT_OUT_DIR: &str = "results";
const OUT_DIR_ENV: &str = "CACHELAB_OUT_DIR";

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "cachelab", version, about = "Cache-network experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write results.csv + metadata.json.
    Run {
        /// Path to the scenario TOML file.
        config: PathBuf,
        /// Worker threads for replications (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: $CACHELAB_OUT_DIR, then ./results).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without simulating anything.
    Validate {
        /// Path to the scenario TOML file.
        config: PathBuf,
    },
    /// Print a scenario's parameters, sweep axes, and output columns.
    Describe {
        /// Scenario name; see list-scenarios.
        scenario: String,
    },
    /// List the available scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, jobs, out, seed } => run_command(&config, jobs, out, seed),
        Command::Validate { config } => validate_command(&config),
        Command::Describe { scenario } => describe_command(&scenario),
        Command::ListScenarios => {
            for s in scenarios::all() {
                println!("{}", s.name);
            }
            ExitCode::SUCCESS
        }
    }
}

/// Reads and validates a config, printing violations. `Ok` only when
/// the config is clean.
fn load_checked(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_RUNTIME));
        }
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid: {e}");
            return Err(ExitCode::from(EXIT_VALIDATION));
        }
    };
    let mut violations = cfg.structural_violations();
    violations.extend(scenarios::validate(&cfg.scenario, &cfg.params));
    if violations.is_empty() {
        Ok(cfg)
    } else {
        for v in &violations {
            eprintln!("invalid: {v}");
        }
        Err(ExitCode::from(EXIT_VALIDATION))
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn run_command(
    path: &PathBuf,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> ExitCode {
    let mut cfg = match load_checked(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };

    let info = scenarios::info(&cfg.scenario).expect("validated scenario name");
    let metadata =
        Metadata::new(&cfg.scenario, cfg.base_seed, cfg.replications, cfg.params.clone());
    let mut table = ResultTable::new(info.columns, metadata);
    let dir = out_dir(out).join(&cfg.scenario);

    match scenarios::run(&cfg.scenario, &cfg.params, cfg.base_seed, cfg.replications, &pool) {
        Ok(rows) => {
            table.extend(rows);
            match table.write(&dir) {
                Ok(csv) => {
                    println!("wrote {} ({} rows)", csv.display(), table.num_rows());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: cannot write results to {}: {e}", dir.display());
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            table.extend(failure.partial_rows);
            match table.write_partial(&dir) {
                Ok(csv) => eprintln!(
                    "preserved {} completed rows in {}",
                    table.num_rows(),
                    csv.display()
                ),
                Err(e) => eprintln!("error: cannot write partial results: {e}"),
            }
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn validate_command(path: &PathBuf) -> ExitCode {
    match load_checked(path) {
        Ok(cfg) => {
            println!("ok: {} ({})", path.display(), cfg.scenario);
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn describe_command(name: &str) -> ExitCode {
    let Some(info) = scenarios::info(name) else {
        eprintln!(
            "invalid: unknown scenario {name:?}; known: {}",
            scenarios::all().iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
        );
        return ExitCode::from(EXIT_VALIDATION);
    };
    println!("{}", info.name);
    println!("  {}", info.summary);
    println!("parameters:");
    for (key, doc) in info.params {
        println!("  {key}: {doc}");
    }
    println!("sweep axes: {}", info.sweep_axes.join(", "));
    println!("columns: {}", info.columns.join(","));
    ExitCode::SUCCESS
}
