use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mp_cli::{
    bench_search, load_scenario_file, nominal_scenario_file, plot_trace_dir, run_scenario_file,
    write_run_outputs, CliError,
};

/// Motion-primitive planner and executive for the bench plant.
#[derive(Parser)]
#[command(name = "mp-cli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file and write trace.csv, plans.json, summary.json.
    Run {
        /// Path to a scenario JSON file.
        scenario: PathBuf,
        /// Override the planner RNG seed from the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $MP_CLI_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force deterministic plan delivery with this tick latency.
        #[arg(long)]
        deterministic_latency: Option<u64>,
    },
    /// Render timeline.svg from a directory containing trace.csv.
    Plot {
        trace_dir: PathBuf,
    },
    /// Time repeated planner invocations and print latency statistics.
    BenchSearch {
        #[arg(long, default_value_t = 100)]
        repeats: usize,
        /// Optional scenario file; defaults to the built-in stand-to-walk case.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn exit_for(err: &CliError) -> ExitCode {
    match err {
        CliError::Schema(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_for(&err)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            deterministic_latency,
        } => {
            let mut file = load_scenario_file(&scenario)?;
            if let Some(seed) = seed {
                file.search.rng_seed = seed;
            }
            if let Some(ticks) = deterministic_latency {
                file.exec.wall_clock_planner = false;
                file.exec.latency_ticks = ticks;
            }
            let out_dir = out
                .or_else(|| std::env::var_os("MP_CLI_OUT_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let trace = run_scenario_file(&file)?;
            write_run_outputs(&trace, &out_dir)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&mp_exec::summary_json(&trace))
                    .expect("serialize summary")
            );
            if trace.summary.goal_reached && trace.summary.failure.is_none() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("run did not reach the goal");
                Ok(ExitCode::from(1))
            }
        }
        Command::Plot { trace_dir } => {
            let out = plot_trace_dir(&trace_dir)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::BenchSearch { repeats, scenario } => {
            let file = match scenario {
                Some(path) => load_scenario_file(&path)?,
                None => nominal_scenario_file(),
            };
            let report = bench_search(&file, repeats)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("serialize report")
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
