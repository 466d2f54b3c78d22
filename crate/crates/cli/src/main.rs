mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use commands::CliError;

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Synth(_) => "synth",
        Command::Train(_) => "train",
        Command::Grid(_) => "grid",
        Command::Select(_) => "select",
        Command::Eval(_) => "eval",
        Command::Kmeans(_) => "kmeans",
        Command::Probe(_) => "probe",
        Command::BenchMargin(_) => "bench-margin",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match &cli.command {
        Command::Synth(a) => commands::synth_cmd(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Grid(a) => commands::grid_cmd(a),
        Command::Select(a) => commands::select_cmd(a),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Kmeans(a) => commands::kmeans_cmd(a),
        Command::Probe(a) => commands::probe_cmd(a),
        Command::BenchMargin(a) => commands::bench_margin_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let mut cmd = Cli::command();
            cmd.build();
            let name = subcommand_name(&cli.command);
            let usage = match cmd.find_subcommand_mut(name) {
                Some(sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("{usage}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
