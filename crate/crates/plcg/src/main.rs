use std::process::ExitCode;

use clap::Parser;
use plcg::cli::{run, Cli, EXIT_USAGE};

fn main() -> ExitCode {
    // clap's own usage exit code (2) would collide with "budget exhausted".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("plcg: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
