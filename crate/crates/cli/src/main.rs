use std::io::Write;
use std::process::ExitCode;

use autohsic_cli::error::exit;
use autohsic_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.stdout.as_bytes()).is_err() {
                return ExitCode::from(exit::DATA);
            }
            match outcome.failure {
                None => ExitCode::from(exit::OK),
                Some(err) => {
                    eprintln!("autohsic: {err}");
                    ExitCode::from(err.exit_code())
                }
            }
        }
        Err(err) => {
            eprintln!("autohsic: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
