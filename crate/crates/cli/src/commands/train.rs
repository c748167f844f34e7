//! `train`: fit the preprocessing pipeline, hold out a test split, train a
//! classifier (optionally on PCA-reduced features), report test metrics,
//! and save everything as one model file.

use std::io::Write;
use std::path::PathBuf;

use admitlens_core::error::{Error, Result};
use admitlens_core::metrics::{confusion_matrix, ConfusionMatrix, MetricsReport};
use admitlens_core::nn::{self, Activation, ArchitectureSpec, NetworkKind, TrainConfig};
use admitlens_core::pca::{fit_pca, PcaModel, Retain};
use admitlens_core::rng::derive_seed;
use admitlens_core::tabular::{fit_pipeline, read_csv, split, TabularDataset};

use crate::config::TrainFileConfig;
use crate::model_file::{to_model_space, ModelFile, FORMAT_VERSION};
use crate::report;

/// Seed stream for the train/test split, disjoint from the streams the
/// trainer derives internally.
pub const STREAM_SPLIT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelChoice {
    /// Feed-forward classifier.
    Ff,
    /// Fully input-convex classifier.
    Icnn,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// Featurized CSV (run `extract` first on raw essay data).
    pub input: PathBuf,
    /// TOML file naming the target column and preprocessing rules.
    #[arg(long)]
    pub config: PathBuf,
    /// Classifier family.
    #[arg(long, value_enum)]
    pub model: ModelChoice,
    /// Reduce features with PCA keeping 95% of the variance.
    #[arg(long)]
    pub pca: bool,
    /// Reduce with PCA keeping this variance fraction instead.
    #[arg(long, conflicts_with = "pca")]
    pub pca_fraction: Option<f64>,
    /// Reduce with PCA to exactly this many components.
    #[arg(long, conflicts_with_all = ["pca", "pca_fraction"])]
    pub pca_components: Option<usize>,
    /// Where to write the trained model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed for the split, initialization, batching, and dropout.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl TrainArgs {
    fn retain(&self) -> Option<Retain> {
        if let Some(k) = self.pca_components {
            Some(Retain::Components(k))
        } else if let Some(f) = self.pca_fraction {
            Some(Retain::VarianceFraction(f))
        } else if self.pca {
            Some(Retain::default())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub loss_trace: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

fn labels_of(data: &TabularDataset) -> Result<Vec<u8>> {
    data.target()
        .map(<[u8]>::to_vec)
        .ok_or_else(|| Error::EmptyInput("pipeline produced no target labels".into()))
}

fn architecture(
    choice: ModelChoice,
    input_dim: usize,
    config: &TrainFileConfig,
) -> Result<ArchitectureSpec> {
    let mut spec = match choice {
        ModelChoice::Ff => ArchitectureSpec::feed_forward(input_dim),
        ModelChoice::Icnn => ArchitectureSpec::ficnn(input_dim),
    };
    let hp = &config.hyperparameters;
    if let Some(sizes) = &hp.hidden_sizes {
        spec.hidden_activations = match choice {
            ModelChoice::Ff => {
                // Keep the default pattern: ReLU throughout, tanh on the
                // last hidden layer.
                let mut acts = vec![Activation::Relu; sizes.len()];
                if let Some(last) = acts.last_mut() {
                    *last = Activation::Tanh;
                }
                acts
            }
            ModelChoice::Icnn => vec![Activation::Relu; sizes.len()],
        };
        spec.hidden_sizes = sizes.clone();
    }
    if let Some(p) = hp.dropout_prob {
        spec.dropout_prob = p;
    }
    spec.validate()?;
    Ok(spec)
}

fn train_config(kind: NetworkKind, seed: u64, config: &TrainFileConfig) -> Result<TrainConfig> {
    let mut tc = TrainConfig::for_kind(kind, seed);
    let hp = &config.hyperparameters;
    if let Some(b) = hp.batch_size {
        tc.batch_size = b;
    }
    if let Some(lr) = hp.learning_rate {
        tc.learning_rate = lr;
    }
    if let Some(l2) = hp.l2_lambda {
        tc.l2_lambda = l2;
    }
    if let Some(e) = hp.epochs {
        tc.epochs = e;
    }
    tc.validate()?;
    Ok(tc)
}

pub fn run(args: &TrainArgs, out: &mut dyn Write) -> Result<TrainOutcome> {
    let file_config = TrainFileConfig::load(&args.config)?;
    let data = read_csv(&args.input)?;
    let (processed, pipeline_stats) = fit_pipeline(&data, &file_config.pipeline())?;

    let fraction = file_config.hyperparameters.train_fraction.unwrap_or(0.8);
    let (train_set, test_set) = split(&processed, fraction, derive_seed(args.seed, STREAM_SPLIT))?;
    let train_labels = labels_of(&train_set)?;
    let test_labels = labels_of(&test_set)?;
    let train_raw = train_set.to_matrix()?;
    let test_raw = test_set.to_matrix()?;

    let pca_model: Option<PcaModel> = match args.retain() {
        Some(retain) => Some(fit_pca(&train_raw, retain)?),
        None => None,
    };
    let train_x = to_model_space(pca_model.as_ref(), &train_raw)?;
    let test_x = to_model_space(pca_model.as_ref(), &test_raw)?;
    if let Some(pca) = &pca_model {
        writeln!(
            out,
            "PCA kept {} of {} dimensions ({:.1}% variance)",
            pca.output_dim(),
            pca.input_dim(),
            100.0 * pca.explained_variance_ratio.iter().sum::<f64>()
        )?;
    }

    let spec = architecture(args.model, train_x.cols(), &file_config)?;
    let config = train_config(spec.kind, args.seed, &file_config)?;
    writeln!(
        out,
        "training {:?} ({} -> {:?} -> 2) on {} rows for {} epochs",
        spec.kind,
        spec.input_dim,
        spec.hidden_sizes,
        train_x.rows(),
        config.epochs
    )?;
    let (params, loss_trace) = nn::train(&spec, &config, &train_x, &train_labels)?;
    if let (Some(first), Some(last)) = (loss_trace.first(), loss_trace.last()) {
        writeln!(out, "epoch mean loss: {first:.6} -> {last:.6}")?;
    }

    let (probs, predicted) = nn::predict(&params, &spec, &test_x)?;
    let scores: Vec<f64> = (0..probs.rows()).map(|r| probs.get(r, 1)).collect();
    let metrics = MetricsReport::compute(&predicted, &scores, &test_labels)?;
    let confusion = confusion_matrix(&predicted, &test_labels)?;
    writeln!(out, "\nheld-out test metrics ({} rows):", test_x.rows())?;
    writeln!(out, "{}", report::metrics_table(&metrics))?;
    writeln!(out, "{}", report::confusion_table(&confusion))?;

    let model = ModelFile {
        format_version: FORMAT_VERSION,
        architecture: spec,
        params,
        pipeline_stats,
        pca_model,
        train_config: config,
        feature_names: train_set.column_names().to_vec(),
        created_seed: args.seed,
    };
    model.save(&args.out)?;
    writeln!(out, "model written to {}", args.out.display())?;

    Ok(TrainOutcome {
        model,
        report: metrics,
        confusion,
        loss_trace,
        n_train: train_raw.rows(),
        n_test: test_raw.rows(),
    })
}
