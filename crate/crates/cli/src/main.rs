use std::process::ExitCode;

use clap::Parser;
use qkd_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qutrit-qkd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
