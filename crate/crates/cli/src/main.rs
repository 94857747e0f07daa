use std::process::ExitCode;

use clap::Parser;
use cpr_lab::{configure_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("cpr-lab: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::from(run(&cli))
}
