//! `multiboltz` command-line frontend. Every command prints one JSON
//! document; failures print `{"error": {"code", "message"}}` on stderr and
//! exit with 1 (domain errors) or 2 (usage errors).

mod args;
mod commands;
mod error;
mod runner;
mod tetris;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, TetrisCommand};
use error::CliError;

fn dispatch(cmd: &Command) -> Result<Value, CliError> {
    match cmd {
        Command::Validate { grammar } => commands::validate_cmd(grammar),
        Command::Eval(a) => commands::eval_cmd(a),
        Command::Sing { grammar, weights, tol } => commands::sing_cmd(grammar, weights.as_deref(), *tol),
        Command::Tune(a) => commands::tune_cmd(a),
        Command::Sample(a) => commands::sample_cmd(a),
        Command::Count {
            grammar,
            n,
            profile,
            weights,
        } => commands::count_cmd(grammar, *n, profile.as_deref(), weights.as_deref()),
        Command::PredictTrials { grammar, n, weights } => commands::predict_cmd(grammar, *n, weights.as_deref()),
        Command::Tetris(t) => match t {
            TetrisCommand::Build { width } => tetris::build(*width),
            TetrisCommand::Stats { width, n } => tetris::stats(*width, *n),
            TetrisCommand::Sample(a) => tetris::sample(a),
            TetrisCommand::Render(a) => tetris::render(a),
        },
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let mut out = dispatch(&cli.command)?;
    if !cli.deterministic {
        if let Value::Object(m) = &mut out {
            m.insert("elapsed_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
        }
    }
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    match &cli.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::usage(e.to_string().trim_end())),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
