use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use foata::cli::{execute, Cli};

fn main() -> ExitCode {
    let outcome = execute(&Cli::parse());
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    let _ = std::io::stdout().flush();
    ExitCode::from(outcome.code as u8)
}
