use std::process::ExitCode;

use clap::Parser;
use nswbandit_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nswbandit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
