mod args;
mod commands;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::{CliError, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("airykdv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let pool = match cli.common.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let Outcome { text, tolerance_failed } = pool.install(|| commands::dispatch(&cli))?;
    match &cli.common.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io(path.display().to_string(), e))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io("stdout".into(), e))?;
        }
    }
    Ok(if tolerance_failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
