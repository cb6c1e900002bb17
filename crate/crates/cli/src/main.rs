mod args;
mod commands;
mod error;
mod manifest;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use error::{CliError, EXIT_USAGE};

fn report(err: &CliError, as_json: bool) {
    if as_json {
        eprintln!("{}", serde_json::to_string(err).expect("error serializes"));
    } else {
        eprintln!("error: {err}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let as_json = std::env::args().any(|a| a == "--error-json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if as_json {
                let text = e.render().to_string();
                report(&CliError::usage(text.lines().next().unwrap_or_default().trim_start_matches("error: ")), true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, as_json);
            ExitCode::from(e.exit_code as u8)
        }
    }
}
