use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stmg_experiments::{run_experiment, ConfigFile, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "stmg", version, about = "Space-time multigrid experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV files.
    Run {
        /// anisotropy-sweep, contrast-sweep, levels-sweep, feature-sweep or optimise
        experiment: Option<String>,
        /// Problem preset 0..=9
        #[arg(long)]
        problem: Option<u8>,
        /// Comma-separated methods, e.g. CK,CR,BP, or "all"
        #[arg(long)]
        methods: Option<String>,
        /// Single method (same as --methods with one entry)
        #[arg(long, conflicts_with = "methods")]
        method: Option<String>,
        /// warm or cold
        #[arg(long)]
        restart: Option<String>,
        /// Level counts as A..B
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML config file; flags override its values
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Run { experiment, problem, methods, method, restart, levels, out, config } = Cli::parse().command;
    let file = match config.as_deref().map(ConfigFile::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides { experiment, problem, methods: methods.or(method), restart, levels, out };
    let cfg = match ExperimentConfig::resolve(file, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
