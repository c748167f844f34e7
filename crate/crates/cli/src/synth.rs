//! Synthetic admission-style dataset with a known ground truth. The label
//! is a thresholded hidden score over a sparse subset of the numeric
//! features (plus one interaction term and Gaussian noise), so explanation
//! quality is checkable: the features an explainer should surface are
//! written to a sidecar file next to the CSV.
//!
//! The layout mirrors the real application data the models were designed
//! for: numeric academic features, an ELC rank with heavy missingness, a
//! residency flag, a protected column meant to be dropped, categorical
//! columns, and free-text essay responses.

use std::path::{Path, PathBuf};

use admitlens_core::error::{Error, Result};
use admitlens_core::rng::Rng;
use admitlens_core::tabular::{write_csv, Column, TabularDataset};

/// Linear ground-truth coefficients on the first numeric features.
pub const SIGNAL_COEFFICIENTS: [(usize, f64); 6] =
    [(2, 2.0), (3, -1.6), (4, 1.2), (5, 1.0), (6, -0.8), (7, 0.6)];

/// The one interaction term: `INTERACTION.2 * num_a * num_b`.
pub const INTERACTION: (usize, usize, f64) = (0, 1, 0.5);

const CATEGORICAL_POOLS: [(&str, &[&str]); 4] = [
    (
        "major",
        &["CS", "CSE", "DataSci", "Informatics", "GameDesign"],
    ),
    ("school_type", &["Public", "Private", "Charter"]),
    ("region", &["North", "South", "East", "West"]),
    ("term", &["Fall", "Winter", "Spring"]),
];

const GENDERS: [&str; 3] = ["F", "M", "X"];

const SIMPLE_WORDS: [&str; 24] = [
    "the", "my", "team", "club", "grew", "code", "math", "game", "plan", "work", "read", "build",
    "help", "year", "school", "friends", "first", "small", "town", "life", "time", "week", "home",
    "family",
];

const COMPLEX_WORDS: [&str; 16] = [
    "university",
    "opportunity",
    "community",
    "responsibility",
    "collaboration",
    "engineering",
    "scholarship",
    "curiosity",
    "determination",
    "innovation",
    "experience",
    "education",
    "perseverance",
    "technology",
    "leadership",
    "mathematics",
];

// Both sentiment pools appear in the bundled lexicon, so extracted
// polarity actually varies across rows.
const POSITIVE_WORDS: [&str; 8] = [
    "passionate",
    "excited",
    "curious",
    "proud",
    "happy",
    "grateful",
    "confident",
    "love",
];

const NEGATIVE_WORDS: [&str; 7] = [
    "difficult",
    "challenging",
    "hard",
    "struggle",
    "fear",
    "bad",
    "worst",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub n_text_columns: usize,
    /// Standard deviation of the Gaussian noise added to the hidden score.
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig {
            n_rows: 4000,
            n_numeric: 25,
            n_categorical: 2,
            n_text_columns: 4,
            noise_std: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 10 {
            return Err(Error::InvalidConfig(format!(
                "n_rows must be at least 10, got {}",
                self.n_rows
            )));
        }
        if self.n_numeric < 8 {
            return Err(Error::InvalidConfig(
                "n_numeric must be at least 8 to carry the hidden signal".into(),
            ));
        }
        if self.n_categorical > CATEGORICAL_POOLS.len() {
            return Err(Error::InvalidConfig(format!(
                "at most {} categorical columns are available",
                CATEGORICAL_POOLS.len()
            )));
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            return Err(Error::InvalidConfig("noise_std must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutcome {
    pub n_rows: usize,
    pub positive_fraction: f64,
    pub truth_path: PathBuf,
}

fn sentence(rng: &mut Rng, complexity: f64) -> String {
    let n_words = 6 + rng.below(9);
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let r = rng.next_f64();
        let word = if r < 0.12 {
            if rng.next_f64() < 0.6 {
                POSITIVE_WORDS[rng.below(POSITIVE_WORDS.len())]
            } else {
                NEGATIVE_WORDS[rng.below(NEGATIVE_WORDS.len())]
            }
        } else if rng.next_f64() < 0.5 * complexity {
            COMPLEX_WORDS[rng.below(COMPLEX_WORDS.len())]
        } else {
            SIMPLE_WORDS[rng.below(SIMPLE_WORDS.len())]
        };
        words.push(word);
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    text.push(if rng.next_f64() < 0.1 { '!' } else { '.' });
    text
}

fn essay(rng: &mut Rng) -> String {
    if rng.next_f64() < 0.01 {
        return String::new();
    }
    // Per-essay dial from terse simple wording to polysyllabic prose, so
    // readability scores spread out.
    let complexity = rng.next_f64();
    let n_sentences = 2 + rng.below(4);
    let sentences: Vec<String> = (0..n_sentences)
        .map(|_| sentence(rng, complexity))
        .collect();
    sentences.join(" ")
}

/// Generates the dataset, writes it as CSV, and writes the ground-truth
/// coefficients to `<out>.truth.tsv`. Byte-deterministic for a fixed
/// config.
pub fn generate(config: &SynthConfig, out: &Path) -> Result<SynthOutcome> {
    config.validate()?;
    let n = config.n_rows;
    let mut rng = Rng::from_stream(config.seed, 1);

    let mut numeric: Vec<Vec<f64>> = vec![Vec::with_capacity(n); config.n_numeric];
    let mut scores = Vec::with_capacity(n);
    let mut elc = Vec::with_capacity(n);
    let mut ca_resident = Vec::with_capacity(n);
    let mut gender = Vec::with_capacity(n);
    let mut categorical: Vec<Vec<String>> = vec![Vec::with_capacity(n); config.n_categorical];
    let mut essays: Vec<Vec<String>> = vec![Vec::with_capacity(n); config.n_text_columns];

    for _ in 0..n {
        let mut row = Vec::with_capacity(config.n_numeric);
        for (j, column) in numeric.iter_mut().enumerate() {
            // Signal features live on [0,1]; filler features get varied
            // scales so the standardize/min-max stages do real work.
            let scale = if j < 8 { 1.0 } else { 1.0 + (j % 5) as f64 };
            let v = rng.next_f64() * scale;
            column.push(v);
            row.push(v);
        }
        let mut score = rng.gaussian() * config.noise_std;
        for &(j, coefficient) in &SIGNAL_COEFFICIENTS {
            score += coefficient * row[j];
        }
        score += INTERACTION.2 * row[INTERACTION.0] * row[INTERACTION.1];
        scores.push(score);

        elc.push((1 + rng.below(9)) as f64);
        ca_resident.push(if rng.next_f64() < 0.93 { 1.0 } else { 0.0 });
        gender.push(GENDERS[rng.below(3)].to_string());
        for (slot, column) in categorical.iter_mut().enumerate() {
            let pool = CATEGORICAL_POOLS[slot].1;
            column.push(pool[rng.below(pool.len())].to_string());
        }
        for column in essays.iter_mut() {
            column.push(essay(&mut rng));
        }
    }

    // Threshold at the median: with continuous scores this splits the
    // rows into equal halves, giving the target class balance.
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n.is_multiple_of(2) {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    } else {
        sorted[n / 2]
    };
    let mut label_rng = Rng::from_stream(config.seed, 2);
    let read_score: Vec<f64> = scores
        .iter()
        .map(|&s| {
            if s > median {
                5.0
            } else {
                (1 + label_rng.below(4)) as f64
            }
        })
        .collect();
    let positive = read_score.iter().filter(|&&v| v == 5.0).count();

    // Missingness goes only where the hidden signal is not: filler
    // numerics lose 2% of cells, the ELC rank 30%.
    let mut missing_rng = Rng::from_stream(config.seed, 3);
    for column in numeric.iter_mut().skip(8) {
        for v in column.iter_mut() {
            if missing_rng.next_f64() < 0.02 {
                *v = f64::NAN;
            }
        }
    }
    for v in elc.iter_mut() {
        if missing_rng.next_f64() < 0.30 {
            *v = f64::NAN;
        }
    }

    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (j, values) in numeric.into_iter().enumerate() {
        names.push(format!("num_{j:02}"));
        columns.push(Column::Numeric(values));
    }
    names.push("elc".into());
    columns.push(Column::Numeric(elc));
    names.push("ca_resident".into());
    columns.push(Column::Numeric(ca_resident));
    names.push("gender".into());
    columns.push(Column::Text(gender));
    for (slot, values) in categorical.into_iter().enumerate() {
        names.push(CATEGORICAL_POOLS[slot].0.to_string());
        columns.push(Column::Text(values));
    }
    for (slot, values) in essays.into_iter().enumerate() {
        names.push(format!("piq{}", slot + 1));
        columns.push(Column::Text(values));
    }
    names.push("read_score".into());
    columns.push(Column::Numeric(read_score));

    let data = TabularDataset::new(names, columns, None)?;
    write_csv(&data, out)?;

    let mut truth_name = out.as_os_str().to_owned();
    truth_name.push(".truth.tsv");
    let truth_path = PathBuf::from(truth_name);
    let mut truth = String::from(
        "# hidden score = sum(coefficient * feature) + noise; read_score = 5 where score > median\n",
    );
    truth.push_str("feature\tcoefficient\n");
    for &(j, coefficient) in &SIGNAL_COEFFICIENTS {
        truth.push_str(&format!("num_{j:02}\t{coefficient}\n"));
    }
    truth.push_str(&format!(
        "num_{:02}*num_{:02}\t{}\n",
        INTERACTION.0, INTERACTION.1, INTERACTION.2
    ));
    std::fs::write(&truth_path, truth)?;

    Ok(SynthOutcome {
        n_rows: n,
        positive_fraction: positive as f64 / n as f64,
        truth_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use admitlens_core::tabular::read_csv;

    fn small_config() -> SynthConfig {
        SynthConfig {
            n_rows: 300,
            n_numeric: 10,
            n_categorical: 2,
            n_text_columns: 2,
            noise_std: 0.05,
            seed: 11,
        }
    }

    #[test]
    fn generated_schema_and_balance() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("synth.csv");
        let outcome = generate(&small_config(), &csv).unwrap();
        assert_eq!(outcome.n_rows, 300);
        assert!(
            (0.45..=0.55).contains(&outcome.positive_fraction),
            "balance {}",
            outcome.positive_fraction
        );

        let data = read_csv(&csv).unwrap();
        assert_eq!(data.n_rows(), 300);
        let names = data.column_names();
        assert_eq!(names.len(), 10 + 3 + 2 + 2 + 1);
        assert_eq!(names[0], "num_00");
        assert!(names.contains(&"elc".to_string()));
        assert!(names.contains(&"gender".to_string()));
        assert!(names.contains(&"major".to_string()));
        assert!(names.contains(&"piq2".to_string()));
        assert_eq!(names.last().unwrap(), "read_score");

        let labels = data.numeric("read_score").unwrap();
        assert!(labels.iter().all(|&v| (1.0..=5.0).contains(&v)));

        // ELC missingness is heavy by construction.
        let elc = data.numeric("elc").unwrap();
        let missing = elc.iter().filter(|v| v.is_nan()).count();
        assert!((0.2..0.4).contains(&(missing as f64 / 300.0)));

        let truth = std::fs::read_to_string(&outcome.truth_path).unwrap();
        assert!(truth.contains("num_02\t2"));
        assert!(truth.contains("num_00*num_01\t0.5"));
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        generate(&small_config(), &a).unwrap();
        generate(&small_config(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

        let mut other = small_config();
        other.seed = 12;
        let c = dir.path().join("c.csv");
        generate(&other, &c).unwrap();
        assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.n_rows = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.n_numeric = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.n_categorical = 9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn essays_are_mostly_nonempty_prose() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("synth.csv");
        generate(&small_config(), &csv).unwrap();
        let data = read_csv(&csv).unwrap();
        let Some(Column::Text(essays)) = data.column("piq1") else {
            panic!("piq1 must be a text column");
        };
        let nonempty = essays.iter().filter(|e| !e.is_empty()).count();
        assert!(nonempty >= 290);
        let sample = essays.iter().find(|e| !e.is_empty()).unwrap();
        assert!(sample.contains(' '));
        assert!(sample.ends_with('.') || sample.ends_with('!'));
    }
}
