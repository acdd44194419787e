//! `swarmloc` command line: run batches, emit scenario configs, validate
//! config files.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 for runtime
//! failures. Errors print as a single machine-parsable line on stderr.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swarmloc::config::load_batch_config;
use swarmloc::montecarlo::{run_batch, run_batch_with_threads, BatchConfig, BatchResult};
use swarmloc::results::write_results;
use swarmloc::scenarios::scenario_toml;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "swarmloc",
    version,
    about = "Deterministic swarm source-localization simulator",
    after_help = "Worker threads default to all cores; set SWARMLOC_THREADS or --threads to override."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch config and write the per-round results table.
    Run {
        /// Batch config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Dotted-key override applied after the file, last writer wins.
        /// Repeatable, e.g. --override scenario.agent_count=10
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Results file to write.
        #[arg(long)]
        output: PathBuf,
        /// Worker thread count for this invocation.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a ready-to-run scenario config
    /// (default, d2d-sweep, cellular-sweep, budget-dt-vs-cellular).
    Scenarios {
        name: String,
        /// Write the config to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse a config, apply overrides, and check every bound without
    /// running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            overrides,
            output,
            threads,
        } => cmd_run(&config, &overrides, &output, threads),
        Command::Scenarios { name, output } => cmd_scenarios(&name, output.as_deref()),
        Command::Validate { config, overrides } => cmd_validate(&config, &overrides),
    }
}

fn cmd_run(
    config_path: &std::path::Path,
    overrides: &[String],
    output: &std::path::Path,
    threads: Option<usize>,
) -> ExitCode {
    let batch: BatchConfig = match load_batch_config(config_path, overrides) {
        Ok(batch) => batch,
        Err(e) => return fail_config(e),
    };
    let result = match threads {
        Some(n) => run_batch_with_threads(&batch, Some(n)),
        None => run_batch(&batch),
    };
    let result = match result {
        Ok(result) => result,
        Err(e) => return fail_runtime(e),
    };
    print_summary(&batch, &result);
    if let Err(e) = write_results(output, &batch, &result, env!("CARGO_PKG_VERSION")) {
        return fail_runtime(e);
    }
    println!("wrote {}", output.display());
    ExitCode::SUCCESS
}

fn print_summary(batch: &BatchConfig, result: &BatchResult) {
    for spec in &result.specs {
        let agg = &spec.aggregate;
        println!(
            "spec {} [{}]: mean final distance {:.3} m (se {:.3}) over {} runs, mean {:.1} rounds",
            spec.descriptor.index,
            spec.descriptor.label,
            agg.mean_final_distance,
            agg.final_distance_se(),
            batch.num_runs,
            agg.mean_rounds_executed,
        );
    }
}

fn cmd_scenarios(name: &str, output: Option<&std::path::Path>) -> ExitCode {
    let rendered = match scenario_toml(name) {
        Ok(r) => r,
        Err(e) => return fail_config(e),
    };
    match output {
        Some(path) => {
            if let Err(e) = fs::write(path, rendered) {
                return fail_runtime(e);
            }
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    ExitCode::SUCCESS
}

fn cmd_validate(config_path: &std::path::Path, overrides: &[String]) -> ExitCode {
    match load_batch_config::<f64>(config_path, overrides) {
        Ok(batch) => {
            let specs = swarmloc::montecarlo::materialize_specs(&batch)
                .expect("validated at load time");
            println!(
                "ok: {} ({} specification(s), {} run(s) each)",
                config_path.display(),
                specs.len(),
                batch.num_runs,
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail_config(e),
    }
}

fn fail_config(error: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: config: {}", one_line(error));
    ExitCode::from(EXIT_CONFIG)
}

fn fail_runtime(error: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: runtime: {}", one_line(error));
    ExitCode::from(EXIT_RUNTIME)
}

/// Collapses multi-line error renderings (TOML parse errors carry source
/// spans) into one machine-parsable line.
fn one_line(error: impl std::fmt::Display) -> String {
    error
        .to_string()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}
