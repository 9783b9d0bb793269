use std::process::ExitCode;

use clap::Parser;

use qbai_cli::args::Cli;
use qbai_cli::{commands, init_threads};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match init_threads().and_then(|_| commands::run(&cli.command, &mut out)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}
