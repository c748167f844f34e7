//! Command-line front end for the admission-prediction pipeline: feature
//! extraction, training, evaluation, explanation, and synthetic data
//! generation. Every seeded command is byte-deterministic: the same
//! arguments on the same input produce identical output files.

pub mod commands;
pub mod config;
pub mod model_file;
pub mod report;
pub mod svg;
pub mod synth;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use admitlens_core::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "admitlens",
    version,
    about = "Train and explain admission classifiers on tabular-plus-essay data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Replace raw text columns with readability and sentiment features.
    Extract(commands::extract::ExtractArgs),
    /// Preprocess a labeled CSV and train a classifier.
    Train(commands::train::TrainArgs),
    /// Score a trained model on labeled data.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Rank the features driving a trained model's predictions.
    Explain(commands::explain::ExplainArgs),
    /// Generate a synthetic dataset with a known ground truth.
    Gensynth(commands::gensynth::GensynthArgs),
}

/// 1 for I/O failures, 2 for anything wrong with the request itself
/// (arguments, schemas, configuration, malformed inputs).
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Io(_) => 1,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 1,
        _ => 2,
    }
}

pub fn run_command(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Extract(args) => commands::extract::run(args, out).map(drop),
        Command::Train(args) => commands::train::run(args, out).map(drop),
        Command::Evaluate(args) => commands::evaluate::run(args, out).map(drop),
        Command::Explain(args) => commands::explain::run(args, out).map(drop),
        Command::Gensynth(args) => commands::gensynth::run(args, out).map(drop),
    }
}

/// Parses and runs a full command line, returning the process exit code.
/// Split out from `main` so integration tests can drive the binary
/// in-process with captured output.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{rendered}");
                0
            } else {
                let _ = write!(stderr, "{rendered}");
                2
            };
        }
    };
    match run_command(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}
