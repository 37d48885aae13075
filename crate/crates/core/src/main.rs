use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crane_sim::cli::{self, RunOptions, Suite, EXIT_CONFIG};
use crane_sim::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "crane-sim", version, about = "Deep-sea crane controller experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cells selected by the config and flags.
    Run {
        config: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        controller: Option<String>,
        /// table5, switching or all
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the normalized config and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run {
        config,
        scenario,
        controller,
        suite,
        seed,
        out,
        print_config,
    } = Cli::parse().command;

    let cfg = match ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let opts = RunOptions {
        suite,
        scenario,
        controller,
        seed,
        out_dir: out,
        threads: None,
    };
    match cli::run(&cfg, &opts) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
