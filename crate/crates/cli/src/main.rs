use std::process::ExitCode;

use clap::Parser;
use mmskit::{run, Cli, CliError};

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit();
        }
    };
    let text = serde_json::to_string_pretty(&report.json).expect("reports serialize");
    if let Err(e) = emit(&cli, &text) {
        eprintln!("error: {e}");
        return e.exit();
    }
    if report.code != 0 {
        eprintln!("error: a guaranteed bound failed to hold");
    }
    ExitCode::from(report.code)
}
