use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lorenz_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // exit 2 is reserved for curves that fail validation
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let outcome = run(&cli.command)?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    match &cli.command.common().out {
        Some(path) => std::fs::write(path, &outcome.output).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = stdout.write_all(outcome.output.as_bytes());
        }
    }
    Ok(outcome.exit_code)
}
