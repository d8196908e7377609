use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use milnor_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((out, code)) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
