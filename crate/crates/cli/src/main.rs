use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use histmode_cli::commands::{cmd_estimate, cmd_experiment, cmd_sample};
use histmode_cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args).map(|s| Some(s + "\n")),
        Command::Sample(args) => cmd_sample(args),
        Command::Experiment(args) => cmd_experiment(args).map(Some),
    };
    match outcome {
        Ok(text) => {
            if let Some(text) = text {
                let mut out = std::io::stdout().lock();
                if out.write_all(text.as_bytes()).is_err() {
                    return ExitCode::from(3);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
