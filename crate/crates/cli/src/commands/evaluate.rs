//! `evaluate`: replay a saved model's pipeline on labeled data and report
//! classification metrics.

use std::io::Write;
use std::path::PathBuf;

use admitlens_core::error::{Error, Result};
use admitlens_core::metrics::{confusion_matrix, ConfusionMatrix, MetricsReport};
use admitlens_core::nn::predict;
use admitlens_core::tabular::{apply_pipeline, read_csv};

use crate::model_file::{to_model_space, ModelFile};
use crate::report;
use crate::svg;

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Trained model file.
    pub model: PathBuf,
    /// Labeled CSV in the schema the model was trained on.
    pub input: PathBuf,
    /// Also write the confusion matrix as an SVG chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub n_rows: usize,
}

pub fn run(args: &EvaluateArgs, out: &mut dyn Write) -> Result<EvaluateOutcome> {
    let model = ModelFile::load(&args.model)?;
    let data = read_csv(&args.input)?;
    let processed = apply_pipeline(&data, &model.pipeline_stats)?;
    let Some(labels) = processed.target().map(<[u8]>::to_vec) else {
        return Err(Error::InvalidConfig(format!(
            "evaluation input must contain the target column {:?}",
            model.pipeline_stats.config.target_column
        )));
    };
    let features = to_model_space(model.pca_model.as_ref(), &processed.to_matrix()?)?;

    let (probs, predicted) = predict(&model.params, &model.architecture, &features)?;
    let scores: Vec<f64> = (0..probs.rows()).map(|r| probs.get(r, 1)).collect();
    let metrics = MetricsReport::compute(&predicted, &scores, &labels)?;
    let confusion = confusion_matrix(&predicted, &labels)?;

    writeln!(out, "evaluated {} rows", features.rows())?;
    writeln!(out, "{}", report::metrics_table(&metrics))?;
    writeln!(out, "{}", report::confusion_table(&confusion))?;
    if let Some(path) = &args.svg {
        std::fs::write(path, svg::confusion_chart(&confusion))?;
        writeln!(out, "confusion chart written to {}", path.display())?;
    }

    Ok(EvaluateOutcome {
        report: metrics,
        confusion,
        n_rows: features.rows(),
    })
}
