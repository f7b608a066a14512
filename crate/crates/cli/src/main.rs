mod args;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::anyhow;
use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::commands::Failure;
use crate::config::Config;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(anyhow!("cannot read config {}: {e}", path.display())))
            .and_then(|text| {
                Config::parse(&text)
                    .map_err(|e| Failure::Usage(e.context(format!("in config {}", path.display()))))
            }),
        None => Ok(Config::default()),
    }
    .and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
