//! The TOML training configuration: what the preprocessing pipeline needs
//! (target column, categorical columns, filter rules) plus optional
//! hyperparameter overrides. Unknown keys are rejected so typos surface as
//! configuration errors instead of silently using defaults.

use std::path::Path;

use serde::Deserialize;

use admitlens_core::error::{Error, Result};
use admitlens_core::tabular::{FilterRules, PipelineConfig};

/// Optional overrides for the published training defaults. Absent keys
/// keep the per-kind defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperOverrides {
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2_lambda: Option<f64>,
    pub epochs: Option<usize>,
    pub dropout_prob: Option<f64>,
    /// Custom hidden widths. Feed-forward layers use ReLU except a final
    /// tanh layer; input-convex layers are all ReLU.
    pub hidden_sizes: Option<Vec<usize>>,
    /// Train split fraction, default 0.8.
    pub train_fraction: Option<f64>,
}

/// Top-level schema of the `--config` file passed to `train`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFileConfig {
    /// Raw review-score column binarized into the label.
    pub target_column: String,
    /// Score mapped to label 1.
    pub top_score: f64,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub filter: FilterRules,
    #[serde(default)]
    pub hyperparameters: HyperOverrides,
}

impl TrainFileConfig {
    pub fn load(path: &Path) -> Result<TrainFileConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            target_column: self.target_column.clone(),
            top_score: self.top_score,
            categorical_columns: self.categorical_columns.clone(),
            filter: self.filter.clone(),
        }
    }
}
