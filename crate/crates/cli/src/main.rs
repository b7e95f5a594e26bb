use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coopmpc_cli::scenario::{load_scenario, resolve_scenario, BUILTIN_DESCRIPTIONS, BUILTIN_NAMES};
use coopmpc_cli::{run_scenario, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "coopmpc", version, about = "Sequential distributed MPC for cooperative multi-agent tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file.
    Run {
        scenario: String,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of closed-loop steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Override the RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Solve independent agents concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Parse and validate a scenario file.
    Validate { path: PathBuf },
    /// List the built-in scenarios.
    ListScenarios,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            steps,
            seed,
            parallel,
        } => {
            let mut config = resolve_scenario(&scenario)?;
            if let Some(s) = steps {
                config.steps = s;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&config.name));
            let outcome = run_scenario(&config, &out, RunOptions { parallel })?;
            let summary = &outcome.header.summary;
            println!(
                "{}: {} steps, {} Lyapunov and {} descent-bound violations, output in {}",
                config.name,
                summary.steps_completed,
                summary.lyapunov_violations.len(),
                summary.bookkeeping_violations.len(),
                out.display()
            );
        }
        Command::Validate { path } => {
            let config = load_scenario(&path)?;
            println!("{}: ok ({} agents, {} steps)", config.name, config.agents.len(), config.steps);
        }
        Command::ListScenarios => {
            for (name, about) in BUILTIN_NAMES.iter().zip(BUILTIN_DESCRIPTIONS) {
                println!("{name:<22} {about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
