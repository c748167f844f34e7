//! `extract`: replace raw essay columns with numeric readability and
//! sentiment features.

use std::io::Write;
use std::path::PathBuf;

use admitlens_core::error::{Error, Result};
use admitlens_core::tabular::{read_csv, write_csv, Column, TabularDataset};
use admitlens_core::textfeat::{extract_piq_features, SentimentLexicon, PIQ_FEATURE_NAMES};

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    /// Input CSV with raw text columns.
    pub input: PathBuf,
    /// Where to write the featurized CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Text columns to featurize, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub text_columns: Vec<String>,
    /// Sentiment lexicon TSV (word, polarity, subjectivity); defaults to
    /// the bundled lexicon.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractOutcome {
    pub n_rows: usize,
    pub n_cols_in: usize,
    pub n_cols_out: usize,
}

/// Drops each text column and appends its feature columns (named
/// `<column>_<feature>`) at the end, so the output has
/// `cols - t + 8t` columns for `t` text columns.
pub fn run(args: &ExtractArgs, out: &mut dyn Write) -> Result<ExtractOutcome> {
    for (i, name) in args.text_columns.iter().enumerate() {
        if args.text_columns[..i].contains(name) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let owned_lexicon;
    let lexicon = match &args.lexicon {
        Some(path) => {
            owned_lexicon = SentimentLexicon::parse(&std::fs::read_to_string(path)?)?;
            &owned_lexicon
        }
        None => SentimentLexicon::bundled(),
    };

    let data = read_csv(&args.input)?;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (name, col) in data.column_names().iter().zip(data.columns()) {
        if !args.text_columns.contains(name) {
            names.push(name.clone());
            columns.push(col.clone());
        }
    }
    for text_col in &args.text_columns {
        let texts = match data.column(text_col) {
            Some(Column::Text(v)) => v,
            Some(Column::Numeric(_)) => {
                return Err(Error::InvalidConfig(format!(
                    "column {text_col:?} is numeric, not text"
                )))
            }
            None => return Err(Error::UnknownColumn(text_col.clone())),
        };
        let mut features: Vec<Vec<f64>> =
            vec![Vec::with_capacity(texts.len()); PIQ_FEATURE_NAMES.len()];
        for text in texts {
            let piq = extract_piq_features(text, lexicon);
            for (slot, value) in piq.to_vec().into_iter().enumerate() {
                features[slot].push(value);
            }
        }
        for (feature_name, values) in PIQ_FEATURE_NAMES.iter().zip(features) {
            names.push(format!("{text_col}_{feature_name}"));
            columns.push(Column::Numeric(values));
        }
    }

    let featurized = TabularDataset::new(names, columns, None)?;
    write_csv(&featurized, &args.out)?;
    let outcome = ExtractOutcome {
        n_rows: data.n_rows(),
        n_cols_in: data.n_cols(),
        n_cols_out: featurized.n_cols(),
    };
    writeln!(
        out,
        "extracted {} features from each of {} text columns",
        PIQ_FEATURE_NAMES.len(),
        args.text_columns.len()
    )?;
    writeln!(
        out,
        "{} rows, {} columns in, {} columns out -> {}",
        outcome.n_rows,
        outcome.n_cols_in,
        outcome.n_cols_out,
        args.out.display()
    )?;
    Ok(outcome)
}
