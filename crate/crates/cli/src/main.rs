use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

mod cli;
mod commands;
mod config;

use cli::{Cli, Command};
use config::merge_config;

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let args = match merge_config(args, &names) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(commands::EXIT_CONFIG);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => commands::EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Convert(a) => commands::convert(a),
        Command::Train(a) => commands::train(a, cli.seed),
        Command::Eval(a) => commands::eval(a),
        Command::Infer(a) => commands::infer(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Plot(a) => commands::plot(a),
        Command::Synth(a) => commands::synth(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose { tracing::Level::INFO } else { tracing::Level::WARN };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).with_target(false).init();
}
