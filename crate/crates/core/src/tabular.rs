//! Tabular dataset container, CSV I/O, and the preprocessing pipeline:
//! record filtering, target binarization, one-hot encoding, median
//! imputation, standardization, and min-max scaling, with fitted statistics
//! captured so the exact transform can be replayed on unseen data.
//!
//! Missing numeric values are represented as NaN; CSV empty cells parse to
//! it and serialize back to empty cells.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::Rng;

/// Marker for a missing numeric value.
pub const MISSING: f64 = f64::NAN;

/// True when `x` is the missing-value marker.
pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

/// One column of a dataset: numbers (NaN = missing) or raw strings.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, keep: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(keep.iter().map(|&i| v[i]).collect()),
            Column::Text(v) => Column::Text(keep.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Immutable table of named columns with an optional binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    column_names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
    target: Option<Vec<u8>>,
}

impl TabularDataset {
    /// Builds a dataset, enforcing equal column lengths, unique names, and a
    /// `{0,1}` target of matching length.
    pub fn new(
        column_names: Vec<String>,
        columns: Vec<Column>,
        target: Option<Vec<u8>>,
    ) -> Result<Self> {
        if column_names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: column_names.len(),
                actual: columns.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let n_rows = columns
            .first()
            .map(Column::len)
            .or_else(|| target.as_ref().map(Vec::len))
            .unwrap_or(0);
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::SchemaMismatch(format!(
                    "column {name:?} has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
        }
        if let Some(t) = &target {
            if t.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    actual: t.len(),
                });
            }
            if t.iter().any(|&v| v > 1) {
                return Err(Error::InvalidConfig("target labels must be 0 or 1".into()));
            }
        }
        Ok(TabularDataset {
            column_names,
            columns,
            n_rows,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn target(&self) -> Option<&[u8]> {
        self.target.as_deref()
    }

    pub fn set_target(&mut self, target: Option<Vec<u8>>) -> Result<()> {
        if let Some(t) = &target {
            if t.len() != self.n_rows {
                return Err(Error::DimensionMismatch {
                    expected: self.n_rows,
                    actual: t.len(),
                });
            }
            if t.iter().any(|&v| v > 1) {
                return Err(Error::InvalidConfig("target labels must be 0 or 1".into()));
            }
        }
        self.target = target;
        Ok(())
    }

    /// Numeric values of the named column; errors on text columns.
    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(Column::Text(_)) => Err(Error::InvalidConfig(format!(
                "column {name:?} is text, expected numeric"
            ))),
            None => Err(Error::UnknownColumn(name.into())),
        }
    }

    /// Removes and returns the named column.
    pub fn remove_column(&mut self, name: &str) -> Result<Column> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))?;
        self.column_names.remove(idx);
        Ok(self.columns.remove(idx))
    }

    fn select_rows(&self, keep: &[usize]) -> TabularDataset {
        TabularDataset {
            column_names: self.column_names.clone(),
            columns: self.columns.iter().map(|c| c.select(keep)).collect(),
            n_rows: keep.len(),
            target: self
                .target
                .as_ref()
                .map(|t| keep.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Dense row-major matrix of all columns; errors if any column is text
    /// or any value is missing.
    pub fn to_matrix(&self) -> Result<Mat> {
        let mut m = Mat::zeros(self.n_rows, self.columns.len());
        for (j, (name, col)) in self.column_names.iter().zip(&self.columns).enumerate() {
            let values = match col {
                Column::Numeric(v) => v,
                Column::Text(_) => {
                    return Err(Error::InvalidConfig(format!(
                        "column {name:?} is text; encode or drop it first"
                    )))
                }
            };
            for (i, &v) in values.iter().enumerate() {
                if is_missing(v) {
                    return Err(Error::MissingValues(format!("column {name:?} row {i}")));
                }
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}

/// Reads a UTF-8 CSV file with a header row. A column is numeric when every
/// non-empty cell parses as a float; empty cells become the missing marker.
pub fn read_csv(path: &Path) -> Result<TabularDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let column_names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let n_cols = column_names.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    for record in reader.records() {
        let record = record?;
        if record.len() != n_cols {
            return Err(Error::SchemaMismatch(format!(
                "row has {} fields, header has {n_cols}",
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_string());
        }
    }
    let columns = cells
        .into_iter()
        .map(|raw| {
            let numeric: Option<Vec<f64>> = raw
                .iter()
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        Some(MISSING)
                    } else {
                        cell.parse::<f64>().ok()
                    }
                })
                .collect();
            match numeric {
                Some(v) => Column::Numeric(v),
                None => Column::Text(raw),
            }
        })
        .collect();
    TabularDataset::new(column_names, columns, None)
}

/// Writes the dataset as CSV. Missing numerics serialize as empty cells;
/// numbers use the shortest representation that round-trips.
pub fn write_csv(data: &TabularDataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(data.column_names())?;
    let mut row: Vec<String> = Vec::with_capacity(data.n_cols());
    for i in 0..data.n_rows() {
        row.clear();
        for col in data.columns() {
            row.push(match col {
                Column::Numeric(v) if is_missing(v[i]) => String::new(),
                Column::Numeric(v) => format!("{}", v[i]),
                Column::Text(v) => v[i].clone(),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// One `column == value` condition on a numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnValue {
    pub column: String,
    pub value: f64,
}

/// Declarative record/column filters applied before any other pipeline step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterRules {
    /// Rows missing any of these columns are removed.
    #[serde(default)]
    pub require_nonmissing: Vec<String>,
    /// Columns removed entirely (identifiers, protected attributes).
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Rows kept only where the column equals the value (within 1e-12).
    #[serde(default)]
    pub keep_where_equal: Vec<ColumnValue>,
    /// Missing entries in the column filled with the value, before any row
    /// removal.
    #[serde(default)]
    pub special_impute: Vec<ColumnValue>,
}

const EQ_TOLERANCE: f64 = 1e-12;

/// Applies [`FilterRules`]: special-impute fills first, then row filters
/// (`require_nonmissing`, `keep_where_equal`), then column drops. Row order
/// is preserved among survivors.
pub fn filter_records(data: &TabularDataset, rules: &FilterRules) -> Result<TabularDataset> {
    for (names, rule) in [
        (&rules.require_nonmissing, "require_nonmissing"),
        (&rules.drop_columns, "drop_columns"),
    ] {
        for name in names {
            if data.column_index(name).is_none() {
                return Err(Error::UnknownColumn(format!("{name} (in {rule})")));
            }
        }
    }
    for (pairs, rule) in [
        (&rules.keep_where_equal, "keep_where_equal"),
        (&rules.special_impute, "special_impute"),
    ] {
        for cv in pairs {
            if data.column_index(&cv.column).is_none() {
                return Err(Error::UnknownColumn(format!("{} (in {rule})", cv.column)));
            }
        }
    }

    let mut data = data.clone();
    for cv in &rules.special_impute {
        let idx = data.column_index(&cv.column).unwrap();
        match &mut data.columns[idx] {
            Column::Numeric(v) => {
                for x in v.iter_mut() {
                    if is_missing(*x) {
                        *x = cv.value;
                    }
                }
            }
            Column::Text(_) => {
                return Err(Error::InvalidConfig(format!(
                    "special_impute column {:?} is text",
                    cv.column
                )))
            }
        }
    }

    let mut keep: Vec<usize> = (0..data.n_rows()).collect();
    for name in &rules.require_nonmissing {
        let idx = data.column_index(name).unwrap();
        match &data.columns[idx] {
            Column::Numeric(v) => keep.retain(|&i| !is_missing(v[i])),
            Column::Text(v) => keep.retain(|&i| !v[i].is_empty()),
        }
    }
    for cv in &rules.keep_where_equal {
        let idx = data.column_index(&cv.column).unwrap();
        match &data.columns[idx] {
            Column::Numeric(v) => {
                keep.retain(|&i| !is_missing(v[i]) && (v[i] - cv.value).abs() <= EQ_TOLERANCE)
            }
            Column::Text(_) => {
                return Err(Error::InvalidConfig(format!(
                    "keep_where_equal column {:?} is text",
                    cv.column
                )))
            }
        }
    }

    let mut out = data.select_rows(&keep);
    for name in &rules.drop_columns {
        out.remove_column(name)?;
    }
    Ok(out)
}

/// Maps review scores to binary labels: 1 where the score equals
/// `top_score` (within 1e-12), else 0. Missing scores are an error.
pub fn binarize_target(scores: &[f64], top_score: f64) -> Result<Vec<u8>> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if is_missing(s) {
                Err(Error::MissingValues(format!(
                    "target score row {i}; filter such rows first"
                )))
            } else {
                Ok(u8::from((s - top_score).abs() <= EQ_TOLERANCE))
            }
        })
        .collect()
}

/// One-hot encodes a text column in place (fit). The vocabulary is the
/// distinct values in first-appearance order; indicator columns are named
/// `<column>=<value>` and occupy the original column's position.
pub fn one_hot_encode(
    data: &TabularDataset,
    column: &str,
) -> Result<(TabularDataset, Vec<String>)> {
    let idx = data
        .column_index(column)
        .ok_or_else(|| Error::UnknownColumn(column.into()))?;
    let values = match &data.columns[idx] {
        Column::Text(v) => v,
        Column::Numeric(_) => {
            return Err(Error::InvalidConfig(format!(
                "column {column:?} is numeric, not categorical"
            )))
        }
    };
    let mut vocab: Vec<String> = Vec::new();
    for v in values {
        if !vocab.iter().any(|seen| seen == v) {
            vocab.push(v.clone());
        }
    }
    let encoded = one_hot_apply(data, column, &vocab)?;
    Ok((encoded, vocab))
}

/// Replays one-hot encoding with a fitted vocabulary. Values outside the
/// vocabulary produce all-zero indicators.
pub fn one_hot_apply(
    data: &TabularDataset,
    column: &str,
    vocab: &[String],
) -> Result<TabularDataset> {
    let idx = data
        .column_index(column)
        .ok_or_else(|| Error::UnknownColumn(column.into()))?;
    let values = match &data.columns[idx] {
        Column::Text(v) => v,
        Column::Numeric(_) => {
            return Err(Error::InvalidConfig(format!(
                "column {column:?} is numeric, not categorical"
            )))
        }
    };
    let indicators: Vec<Vec<f64>> = vocab
        .iter()
        .map(|entry| values.iter().map(|v| f64::from(v == entry)).collect())
        .collect();

    let mut names = Vec::with_capacity(data.n_cols() + vocab.len() - 1);
    let mut columns = Vec::with_capacity(data.n_cols() + vocab.len() - 1);
    for (j, (name, col)) in data.column_names.iter().zip(&data.columns).enumerate() {
        if j == idx {
            for (entry, ind) in vocab.iter().zip(&indicators) {
                names.push(format!("{column}={entry}"));
                columns.push(Column::Numeric(ind.clone()));
            }
        } else {
            names.push(name.clone());
            columns.push(col.clone());
        }
    }
    TabularDataset::new(names, columns, data.target.clone())
}

/// Fills missing entries with the column median (fit) or a previously
/// fitted median (apply). Fit errors when every entry is missing; the
/// median of an even-count set is the mean of the two middle values.
pub fn median_impute(column: &[f64], fitted_median: Option<f64>) -> Result<(Vec<f64>, f64)> {
    let median = match fitted_median {
        Some(m) => m,
        None => {
            let mut present: Vec<f64> =
                column.iter().copied().filter(|x| !is_missing(*x)).collect();
            if present.is_empty() {
                return Err(Error::DegenerateInput(
                    "cannot impute: every value is missing".into(),
                ));
            }
            present.sort_unstable_by(f64::total_cmp);
            let n = present.len();
            if n % 2 == 1 {
                present[n / 2]
            } else {
                (present[n / 2 - 1] + present[n / 2]) / 2.0
            }
        }
    };
    let filled = column
        .iter()
        .map(|&x| if is_missing(x) { median } else { x })
        .collect();
    Ok((filled, median))
}

fn numeric_columns(data: &TabularDataset) -> Result<Vec<&Vec<f64>>> {
    data.column_names
        .iter()
        .zip(&data.columns)
        .map(|(name, col)| match col {
            Column::Numeric(v) => Ok(v),
            Column::Text(_) => Err(Error::InvalidConfig(format!(
                "column {name:?} is text; list it as categorical or drop it"
            ))),
        })
        .collect()
}

fn check_no_missing(data: &TabularDataset) -> Result<()> {
    for (name, col) in data.column_names.iter().zip(&data.columns) {
        if let Column::Numeric(v) = col {
            if v.iter().any(|x| is_missing(*x)) {
                return Err(Error::MissingValues(format!(
                    "column {name:?}; impute before scaling"
                )));
            }
        }
    }
    Ok(())
}

fn rebuild(data: &TabularDataset, columns: Vec<Vec<f64>>) -> TabularDataset {
    TabularDataset {
        column_names: data.column_names.clone(),
        columns: columns.into_iter().map(Column::Numeric).collect(),
        n_rows: data.n_rows,
        target: data.target.clone(),
    }
}

/// Transforms each column to `(x - mean) / std` with population standard
/// deviation. Zero-variance columns become all zeros with std recorded
/// as 1. Pass fitted `(mean, std)` pairs to replay.
pub fn standardize(
    data: &TabularDataset,
    fitted: Option<&[(f64, f64)]>,
) -> Result<(TabularDataset, Vec<(f64, f64)>)> {
    check_no_missing(data)?;
    let cols = numeric_columns(data)?;
    if let Some(f) = fitted {
        if f.len() != cols.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                actual: f.len(),
            });
        }
    }
    let mut stats = Vec::with_capacity(cols.len());
    let mut out = Vec::with_capacity(cols.len());
    for (j, v) in cols.iter().enumerate() {
        let (mean, std) = match fitted {
            Some(f) => f[j],
            None => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                (mean, if std == 0.0 { 1.0 } else { std })
            }
        };
        stats.push((mean, std));
        out.push(v.iter().map(|x| (x - mean) / std).collect());
    }
    Ok((rebuild(data, out), stats))
}

/// Maps each column to `(x - min) / (max - min)`, clamped to `[0, 1]`.
/// Degenerate ranges (`max == min`) become all zeros. Pass fitted
/// `(min, max)` pairs to replay.
pub fn minmax_scale(
    data: &TabularDataset,
    fitted: Option<&[(f64, f64)]>,
) -> Result<(TabularDataset, Vec<(f64, f64)>)> {
    check_no_missing(data)?;
    let cols = numeric_columns(data)?;
    if let Some(f) = fitted {
        if f.len() != cols.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                actual: f.len(),
            });
        }
    }
    let mut stats = Vec::with_capacity(cols.len());
    let mut out = Vec::with_capacity(cols.len());
    for (j, v) in cols.iter().enumerate() {
        let (min, max) = match fitted {
            Some(f) => f[j],
            None => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                }),
        };
        stats.push((min, max));
        let range = max - min;
        out.push(
            v.iter()
                .map(|x| {
                    if range == 0.0 {
                        0.0
                    } else {
                        ((x - min) / range).clamp(0.0, 1.0)
                    }
                })
                .collect(),
        );
    }
    Ok((rebuild(data, out), stats))
}

/// Seeded shuffle followed by a prefix split; the train partition holds
/// `floor(train_fraction * n_rows)` rows.
pub fn split(
    data: &TabularDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    if data.n_rows() < 2 {
        return Err(Error::DegenerateInput(format!(
            "cannot split {} rows",
            data.n_rows()
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut indices: Vec<usize> = (0..data.n_rows()).collect();
    Rng::new(seed).shuffle(&mut indices);
    let n_train = (train_fraction * data.n_rows() as f64).floor() as usize;
    Ok((
        data.select_rows(&indices[..n_train]),
        data.select_rows(&indices[n_train..]),
    ))
}

/// Fitted per-column statistics, in pipeline-stage units: `median` is in
/// raw units, `mean`/`std` in imputed raw units, `min`/`max` in
/// standardized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub median: f64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// What to preprocess and how; embedded in [`PipelineStats`] so a fitted
/// pipeline replays without external configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Raw review-score column binarized into the target.
    pub target_column: String,
    /// Score mapped to label 1; everything else maps to 0.
    pub top_score: f64,
    /// Text columns to one-hot encode, in encoding order.
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub filter: FilterRules,
}

/// Everything needed to replay a fitted pipeline on conforming input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub config: PipelineConfig,
    /// Post-encoding feature columns, in order; apply-time input must
    /// produce exactly this schema.
    pub fitted_column_order: Vec<String>,
    /// Parallel to `fitted_column_order`.
    pub column_stats: Vec<ColumnStats>,
    /// Per categorical column: fitted vocabulary in first-appearance order.
    pub one_hot_vocab: Vec<(String, Vec<String>)>,
}

impl PipelineStats {
    /// Checks internal consistency (used after deserializing model files).
    pub fn validate(&self) -> Result<()> {
        if self.fitted_column_order.len() != self.column_stats.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} fitted columns but {} column stats",
                self.fitted_column_order.len(),
                self.column_stats.len()
            )));
        }
        for (name, cs) in self.fitted_column_order.iter().zip(&self.column_stats) {
            let nan = cs.std.is_nan() || cs.min.is_nan() || cs.max.is_nan();
            if nan || cs.std < 0.0 || cs.max < cs.min {
                return Err(Error::SchemaMismatch(format!(
                    "column {name:?} has invalid stats (std {}, min {}, max {})",
                    cs.std, cs.min, cs.max
                )));
            }
        }
        Ok(())
    }
}

fn validate_config(config: &PipelineConfig) -> Result<()> {
    if config.target_column.is_empty() {
        return Err(Error::InvalidConfig("target_column is empty".into()));
    }
    if config.filter.drop_columns.contains(&config.target_column) {
        return Err(Error::InvalidConfig(
            "target_column appears in drop_columns".into(),
        ));
    }
    if config.categorical_columns.contains(&config.target_column) {
        return Err(Error::InvalidConfig(
            "target_column appears in categorical_columns".into(),
        ));
    }
    Ok(())
}

/// Runs the full preprocessing pipeline in fixed order (filter, binarize
/// target, one-hot encode, median impute, standardize, min-max scale) and
/// returns the transformed dataset plus the statistics needed to replay it.
pub fn fit_pipeline(
    data: &TabularDataset,
    config: &PipelineConfig,
) -> Result<(TabularDataset, PipelineStats)> {
    validate_config(config)?;
    let mut data = filter_records(data, &config.filter)?;

    let scores = data.numeric(&config.target_column)?.to_vec();
    let labels = binarize_target(&scores, config.top_score)?;
    data.remove_column(&config.target_column)?;
    data.set_target(Some(labels))?;

    let mut one_hot_vocab = Vec::with_capacity(config.categorical_columns.len());
    for col in &config.categorical_columns {
        let (encoded, vocab) = one_hot_encode(&data, col)?;
        one_hot_vocab.push((col.clone(), vocab));
        data = encoded;
    }

    let mut medians = Vec::with_capacity(data.n_cols());
    let mut imputed = Vec::with_capacity(data.n_cols());
    for (name, col) in data.column_names.iter().zip(&data.columns) {
        let values = match col {
            Column::Numeric(v) => v,
            Column::Text(_) => {
                return Err(Error::InvalidConfig(format!(
                    "column {name:?} is text; list it as categorical or drop it"
                )))
            }
        };
        let (filled, median) = median_impute(values, None)?;
        medians.push(median);
        imputed.push(filled);
    }
    let data = rebuild(&data, imputed);

    let (data, mean_std) = standardize(&data, None)?;
    let (data, min_max) = minmax_scale(&data, None)?;

    let column_stats = medians
        .iter()
        .zip(&mean_std)
        .zip(&min_max)
        .map(|((&median, &(mean, std)), &(min, max))| ColumnStats {
            median,
            mean,
            std,
            min,
            max,
        })
        .collect();
    let stats = PipelineStats {
        config: config.clone(),
        fitted_column_order: data.column_names.clone(),
        column_stats,
        one_hot_vocab,
    };
    Ok((data, stats))
}

/// Replays a fitted pipeline on new data. The target column is optional at
/// apply time (rules requiring it are skipped when absent); the
/// post-encoding schema must match `fitted_column_order` exactly.
pub fn apply_pipeline(data: &TabularDataset, stats: &PipelineStats) -> Result<TabularDataset> {
    stats.validate()?;
    let config = &stats.config;
    let has_target = data.column_index(&config.target_column).is_some();

    let mut filter = config.filter.clone();
    if !has_target {
        filter
            .require_nonmissing
            .retain(|c| *c != config.target_column);
    }
    let mut data = filter_records(data, &filter)?;

    if has_target {
        let scores = data.numeric(&config.target_column)?.to_vec();
        let labels = binarize_target(&scores, config.top_score)?;
        data.remove_column(&config.target_column)?;
        data.set_target(Some(labels))?;
    }

    for (col, vocab) in &stats.one_hot_vocab {
        data = one_hot_apply(&data, col, vocab)?;
    }

    if data.column_names != stats.fitted_column_order {
        return Err(Error::SchemaMismatch(format!(
            "apply-time columns {:?} do not match fitted columns {:?}",
            data.column_names, stats.fitted_column_order
        )));
    }

    let mut imputed = Vec::with_capacity(data.n_cols());
    for (col, cs) in data.columns.iter().zip(&stats.column_stats) {
        let values = match col {
            Column::Numeric(v) => v,
            Column::Text(_) => unreachable!("schema check passed"),
        };
        let (filled, _) = median_impute(values, Some(cs.median))?;
        imputed.push(filled);
    }
    let data = rebuild(&data, imputed);

    let mean_std: Vec<(f64, f64)> = stats.column_stats.iter().map(|c| (c.mean, c.std)).collect();
    let (data, _) = standardize(&data, Some(&mean_std))?;
    let min_max: Vec<(f64, f64)> = stats.column_stats.iter().map(|c| (c.min, c.max)).collect();
    let (data, _) = minmax_scale(&data, Some(&min_max))?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(cols: Vec<(&str, Column)>) -> TabularDataset {
        let (names, columns) = cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
        TabularDataset::new(names, columns, None).unwrap()
    }

    fn num(values: &[f64]) -> Column {
        Column::Numeric(values.to_vec())
    }

    fn text(values: &[&str]) -> Column {
        Column::Text(values.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn constructor_enforces_invariants() {
        let err = TabularDataset::new(
            vec!["a".into(), "a".into()],
            vec![num(&[1.0]), num(&[2.0])],
            None,
        );
        assert!(matches!(err, Err(Error::DuplicateColumn(_))));

        let err = TabularDataset::new(
            vec!["a".into(), "b".into()],
            vec![num(&[1.0]), num(&[2.0, 3.0])],
            None,
        );
        assert!(err.is_err());

        let err = TabularDataset::new(vec!["a".into()], vec![num(&[1.0])], Some(vec![2]));
        assert!(err.is_err());
    }

    #[test]
    fn filter_applies_special_impute_before_row_removal() {
        let data = dataset(vec![
            ("elc", num(&[MISSING, 4.0, MISSING])),
            ("score", num(&[5.0, MISSING, 3.0])),
        ]);
        let rules = FilterRules {
            require_nonmissing: vec!["score".into()],
            special_impute: vec![ColumnValue {
                column: "elc".into(),
                value: 10.0,
            }],
            ..FilterRules::default()
        };
        let out = filter_records(&data, &rules).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(out.numeric("elc").unwrap(), &[10.0, 10.0]);
        assert_eq!(out.numeric("score").unwrap(), &[5.0, 3.0]);
    }

    #[test]
    fn filter_keeps_equal_drops_columns_and_preserves_order() {
        let data = dataset(vec![
            ("resident", num(&[1.0, 0.0, 1.0, MISSING])),
            ("gender", text(&["x", "y", "x", "y"])),
            ("gpa", num(&[3.0, 2.0, 4.0, 3.5])),
        ]);
        let rules = FilterRules {
            keep_where_equal: vec![ColumnValue {
                column: "resident".into(),
                value: 1.0,
            }],
            drop_columns: vec!["gender".into()],
            ..FilterRules::default()
        };
        let out = filter_records(&data, &rules).unwrap();
        assert_eq!(out.column_names(), &["resident".to_string(), "gpa".into()]);
        assert_eq!(out.numeric("gpa").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn filter_rejects_unknown_columns_and_empty_rules_are_identity() {
        let data = dataset(vec![("a", num(&[1.0, 2.0]))]);
        let rules = FilterRules {
            require_nonmissing: vec!["zzz".into()],
            ..FilterRules::default()
        };
        match filter_records(&data, &rules) {
            Err(Error::UnknownColumn(msg)) => assert!(msg.contains("zzz")),
            other => panic!("expected unknown-column error, got {other:?}"),
        }
        let out = filter_records(&data, &FilterRules::default()).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn binarize_maps_top_score_to_one() {
        assert_eq!(
            binarize_target(&[5.0, 3.0, 5.0], 5.0).unwrap(),
            vec![1, 0, 1]
        );
        assert_eq!(binarize_target(&[1.0, 2.0], 5.0).unwrap(), vec![0, 0]);
        assert_eq!(binarize_target(&[4.0, 4.0], 4.0).unwrap(), vec![1, 1]);
        assert!(binarize_target(&[5.0, MISSING], 5.0).is_err());
    }

    #[test]
    fn one_hot_uses_first_appearance_order_and_position() {
        let data = dataset(vec![
            ("before", num(&[9.0, 8.0, 7.0])),
            ("major", text(&["CS", "CSE", "CS"])),
            ("after", num(&[1.0, 2.0, 3.0])),
        ]);
        let (out, vocab) = one_hot_encode(&data, "major").unwrap();
        assert_eq!(vocab, vec!["CS".to_string(), "CSE".into()]);
        assert_eq!(
            out.column_names(),
            &[
                "before".to_string(),
                "major=CS".into(),
                "major=CSE".into(),
                "after".into()
            ]
        );
        assert_eq!(out.numeric("major=CS").unwrap(), &[1.0, 0.0, 1.0]);
        assert_eq!(out.numeric("major=CSE").unwrap(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn one_hot_handles_degenerate_and_unseen_values() {
        let data = dataset(vec![("c", text(&["only", "only"]))]);
        let (out, vocab) = one_hot_encode(&data, "c").unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(out.numeric("c=only").unwrap(), &[1.0, 1.0]);

        let apply_data = dataset(vec![("c", text(&["GameDesign"]))]);
        let out = one_hot_apply(&apply_data, "c", &["CS".into(), "CSE".into()]).unwrap();
        assert_eq!(out.numeric("c=CS").unwrap(), &[0.0]);
        assert_eq!(out.numeric("c=CSE").unwrap(), &[0.0]);
    }

    #[test]
    fn median_impute_fit_and_apply() {
        let (filled, median) = median_impute(&[1.0, 2.0, MISSING, 100.0], None).unwrap();
        assert_eq!(median, 2.0);
        assert_eq!(filled, vec![1.0, 2.0, 2.0, 100.0]);

        let (filled, median) = median_impute(&[1.0, 3.0, MISSING], None).unwrap();
        assert_eq!(median, 2.0);
        assert_eq!(filled, vec![1.0, 3.0, 2.0]);

        assert!(median_impute(&[MISSING, MISSING], None).is_err());

        let (filled, _) = median_impute(&[MISSING, 7.0], Some(42.0)).unwrap();
        assert_eq!(filled, vec![42.0, 7.0]);
    }

    #[test]
    fn standardize_matches_population_formula() {
        let data = dataset(vec![("a", num(&[1.0, 3.0]))]);
        let (out, stats) = standardize(&data, None).unwrap();
        assert_eq!(out.numeric("a").unwrap(), &[-1.0, 1.0]);
        assert_eq!(stats, vec![(2.0, 1.0)]);

        let constant = dataset(vec![("c", num(&[7.0, 7.0, 7.0]))]);
        let (out, stats) = standardize(&constant, None).unwrap();
        assert_eq!(out.numeric("c").unwrap(), &[0.0, 0.0, 0.0]);
        assert_eq!(stats, vec![(7.0, 1.0)]);

        let apply = dataset(vec![("a", num(&[4.0]))]);
        let (out, _) = standardize(&apply, Some(&[(0.0, 2.0)])).unwrap();
        assert_eq!(out.numeric("a").unwrap(), &[2.0]);

        let missing = dataset(vec![("a", num(&[1.0, MISSING]))]);
        assert!(standardize(&missing, None).is_err());
    }

    #[test]
    fn minmax_scales_and_clamps() {
        let data = dataset(vec![("a", num(&[2.0, 4.0, 6.0]))]);
        let (out, stats) = minmax_scale(&data, None).unwrap();
        assert_eq!(out.numeric("a").unwrap(), &[0.0, 0.5, 1.0]);
        assert_eq!(stats, vec![(2.0, 6.0)]);

        let constant = dataset(vec![("c", num(&[3.0, 3.0]))]);
        let (out, _) = minmax_scale(&constant, None).unwrap();
        assert_eq!(out.numeric("c").unwrap(), &[0.0, 0.0]);

        let apply = dataset(vec![("a", num(&[15.0, -3.0]))]);
        let (out, _) = minmax_scale(&apply, Some(&[(0.0, 10.0)])).unwrap();
        assert_eq!(out.numeric("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data = dataset(vec![(
            "x",
            num(&(0..10).map(|i| i as f64).collect::<Vec<_>>()),
        )]);
        let (train, test) = split(&data, 0.8, 11).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (8, 2));

        let (train2, test2) = split(&data, 0.8, 11).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let five = dataset(vec![("x", num(&[0.0, 1.0, 2.0, 3.0, 4.0]))]);
        let (train, test) = split(&five, 0.5, 1).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (2, 3));

        let mut all: Vec<f64> = train
            .numeric("x")
            .unwrap()
            .iter()
            .chain(test.numeric("x").unwrap())
            .copied()
            .collect();
        all.sort_unstable_by(f64::total_cmp);
        assert_eq!(all, vec![0.0, 1.0, 2.0, 3.0, 4.0]);

        let tiny = dataset(vec![("x", num(&[1.0]))]);
        assert!(split(&tiny, 0.8, 1).is_err());
        assert!(split(&five, 1.0, 1).is_err());
    }

    fn sample_config() -> PipelineConfig {
        PipelineConfig {
            target_column: "read_score".into(),
            top_score: 5.0,
            categorical_columns: vec!["major".into()],
            filter: FilterRules {
                require_nonmissing: vec!["read_score".into()],
                drop_columns: vec!["gender".into()],
                keep_where_equal: vec![ColumnValue {
                    column: "resident".into(),
                    value: 1.0,
                }],
                special_impute: vec![ColumnValue {
                    column: "elc".into(),
                    value: 10.0,
                }],
            },
        }
    }

    fn sample_data() -> TabularDataset {
        dataset(vec![
            ("gpa", num(&[3.0, 3.5, MISSING, 2.0, 4.0, 3.8])),
            ("elc", num(&[MISSING, 4.0, 2.0, MISSING, 6.0, 1.0])),
            ("major", text(&["CS", "CSE", "CS", "DataSci", "CS", "CSE"])),
            ("gender", text(&["a", "b", "a", "b", "a", "b"])),
            ("resident", num(&[1.0, 1.0, 1.0, 0.0, 1.0, 1.0])),
            ("read_score", num(&[5.0, 3.0, MISSING, 5.0, 5.0, 2.0])),
        ])
    }

    #[test]
    fn pipeline_fit_produces_unit_interval_features_and_labels() {
        let (out, stats) = fit_pipeline(&sample_data(), &sample_config()).unwrap();
        // Row 2 (missing read_score) and row 3 (non-resident) are removed.
        assert_eq!(out.n_rows(), 4);
        assert_eq!(out.target().unwrap(), &[1, 0, 1, 0]);
        assert!(out
            .column_names()
            .iter()
            .all(|n| n != "gender" && n != "read_score" && n != "major"));
        assert!(out.column_names().iter().any(|n| n == "major=CS"));
        for col in out.columns() {
            let Column::Numeric(v) = col else { panic!() };
            assert!(v.iter().all(|x| (0.0..=1.0).contains(x) && !is_missing(*x)));
        }
        assert_eq!(stats.fitted_column_order.len(), stats.column_stats.len());
        stats.validate().unwrap();
    }

    #[test]
    fn pipeline_apply_replays_fit_exactly() {
        let data = sample_data();
        let (fit_out, stats) = fit_pipeline(&data, &sample_config()).unwrap();
        let applied = apply_pipeline(&data, &stats).unwrap();
        assert_eq!(applied.target(), fit_out.target());
        for (a, b) in applied.columns().iter().zip(fit_out.columns()) {
            let (Column::Numeric(a), Column::Numeric(b)) = (a, b) else {
                panic!()
            };
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pipeline_apply_without_target_column() {
        let data = sample_data();
        let (_, stats) = fit_pipeline(&data, &sample_config()).unwrap();
        let mut unlabeled = data.clone();
        unlabeled.remove_column("read_score").unwrap();
        let out = apply_pipeline(&unlabeled, &stats).unwrap();
        assert!(out.target().is_none());
        // Only the non-resident row is removed now.
        assert_eq!(out.n_rows(), 5);
    }

    #[test]
    fn pipeline_apply_rejects_schema_drift() {
        let data = sample_data();
        let (_, stats) = fit_pipeline(&data, &sample_config()).unwrap();

        let mut missing_col = data.clone();
        missing_col.remove_column("gpa").unwrap();
        assert!(matches!(
            apply_pipeline(&missing_col, &stats),
            Err(Error::SchemaMismatch(_) | Error::UnknownColumn(_))
        ));

        let reordered = dataset(vec![
            ("elc", num(&[4.0])),
            ("gpa", num(&[3.0])),
            ("major", text(&["CS"])),
            ("gender", text(&["a"])),
            ("resident", num(&[1.0])),
            ("read_score", num(&[5.0])),
        ]);
        assert!(matches!(
            apply_pipeline(&reordered, &stats),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn csv_round_trip_preserves_values_and_missing() {
        let dir = std::env::temp_dir().join("admitlens-tabular-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round_trip.csv");
        let data = dataset(vec![
            ("x", num(&[1.5, MISSING, -0.25])),
            ("label", text(&["a b", "", "c,d"])),
        ]);
        write_csv(&data, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.column_names(), data.column_names());
        let x = back.numeric("x").unwrap();
        assert_eq!(x[0], 1.5);
        assert!(is_missing(x[1]));
        assert_eq!(x[2], -0.25);
        match back.column("label").unwrap() {
            Column::Text(v) => assert_eq!(v, &["a b", "", "c,d"]),
            _ => panic!("expected text column"),
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn csv_infers_numeric_only_when_all_cells_parse() {
        let dir = std::env::temp_dir().join("admitlens-tabular-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("inference.csv");
        std::fs::write(&path, "a,b\n1,x\n2,3\n").unwrap();
        let data = read_csv(&path).unwrap();
        assert!(matches!(data.column("a").unwrap(), Column::Numeric(_)));
        assert!(matches!(data.column("b").unwrap(), Column::Text(_)));
        std::fs::remove_file(&path).unwrap();
    }

    proptest! {
        #[test]
        fn fit_apply_consistency(
            rows in proptest::collection::vec((0.0f64..10.0, 0u8..3, -5.0f64..5.0), 4..40),
            top in 0u8..3,
        ) {
            let cats = ["CS", "CSE", "DataSci"];
            let data = dataset(vec![
                ("x", num(&rows.iter().map(|r| r.2).collect::<Vec<_>>())),
                ("major", Column::Text(
                    rows.iter().map(|r| cats[r.1 as usize].to_string()).collect(),
                )),
                ("score", num(&rows.iter().map(|r| r.0.round()).collect::<Vec<_>>())),
            ]);
            let config = PipelineConfig {
                target_column: "score".into(),
                top_score: top as f64,
                categorical_columns: vec!["major".into()],
                filter: FilterRules::default(),
            };
            let (fit_out, stats) = fit_pipeline(&data, &config).unwrap();
            let applied = apply_pipeline(&data, &stats).unwrap();
            prop_assert_eq!(applied.target(), fit_out.target());
            for (a, b) in applied.columns().iter().zip(fit_out.columns()) {
                let (Column::Numeric(a), Column::Numeric(b)) = (a, b) else {
                    panic!()
                };
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-12);
                    prop_assert!((0.0..=1.0).contains(x));
                }
            }
        }

        #[test]
        fn split_partitions_are_exhaustive(
            n in 2usize..60,
            fraction in 0.05f64..0.95,
            seed in 0u64..1000,
        ) {
            let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let data = dataset(vec![("x", num(&values))]);
            let (train, test) = split(&data, fraction, seed).unwrap();
            prop_assert_eq!(train.n_rows(), (fraction * n as f64).floor() as usize);
            prop_assert_eq!(train.n_rows() + test.n_rows(), n);
            let mut all: Vec<f64> = train
                .numeric("x").unwrap().iter()
                .chain(test.numeric("x").unwrap())
                .copied()
                .collect();
            all.sort_unstable_by(f64::total_cmp);
            prop_assert_eq!(all, values);
        }

        #[test]
        fn binarize_commutes_with_permutation(
            scores in proptest::collection::vec(0.0f64..5.0, 1..30),
        ) {
            let labels = binarize_target(&scores, 4.0).unwrap();
            let mut perm: Vec<usize> = (0..scores.len()).collect();
            perm.reverse();
            let permuted: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
            let permuted_labels = binarize_target(&permuted, 4.0).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(permuted_labels[k], labels[i]);
            }
        }
    }
}
