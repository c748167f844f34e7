//! `gensynth`: generate a synthetic admissions dataset whose ground-truth
//! drivers are written to a sidecar, so the training and explanation
//! pipeline can be verified end to end without real applicant data.

use std::io::Write;
use std::path::PathBuf;

use admitlens_core::error::Result;

use crate::synth::{generate, SynthConfig, SynthOutcome};

#[derive(Debug, clap::Args)]
pub struct GensynthArgs {
    /// Where to write the CSV; the ground truth lands next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 4000)]
    pub rows: usize,
    /// Numeric feature columns (the first eight carry the signal).
    #[arg(long, default_value_t = 25)]
    pub numeric: usize,
    /// Categorical columns, up to 4.
    #[arg(long, default_value_t = 2)]
    pub categorical: usize,
    /// Essay text columns.
    #[arg(long, default_value_t = 4)]
    pub text_cols: usize,
    /// Noise added to the hidden score.
    #[arg(long, default_value_t = 0.05)]
    pub noise_std: f64,
}

pub fn run(args: &GensynthArgs, out: &mut dyn Write) -> Result<SynthOutcome> {
    let config = SynthConfig {
        n_rows: args.rows,
        n_numeric: args.numeric,
        n_categorical: args.categorical,
        n_text_columns: args.text_cols,
        noise_std: args.noise_std,
        seed: args.seed,
    };
    let outcome = generate(&config, &args.out)?;
    writeln!(
        out,
        "wrote {} rows to {} (positive fraction {:.3})",
        outcome.n_rows,
        args.out.display(),
        outcome.positive_fraction
    )?;
    writeln!(out, "ground truth: {}", outcome.truth_path.display())?;
    Ok(outcome)
}
