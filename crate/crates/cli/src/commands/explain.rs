//! `explain`: rank the model-space features a trained classifier relies
//! on. Saliency (mean absolute gradient of the admit logit) picks the
//! candidate set, then a local surrogate is fitted around each instance
//! and the signed weights are averaged into a global report.

use std::io::Write;
use std::path::PathBuf;

use admitlens_core::error::{Error, Result};
use admitlens_core::explain::{
    global_aggregate, lime_explain, saliency_ranking, GlobalExplanation, LimeConfig,
    LocalExplanation,
};
use admitlens_core::linalg::Mat;
use admitlens_core::nn::NetworkKind;
use admitlens_core::tabular::{apply_pipeline, read_csv};

use crate::model_file::{model_space_stds, to_model_space, ModelFile};
use crate::report;
use crate::svg;

#[derive(Debug, clap::Args)]
pub struct ExplainArgs {
    /// Trained model file.
    pub model: PathBuf,
    /// CSV of instances to explain (labels optional).
    pub input: PathBuf,
    /// Saliency keeps this many features for the surrogates; defaults to
    /// 20 (or every feature if the model has fewer).
    #[arg(long, conflicts_with = "skip_saliency")]
    pub top_k: Option<usize>,
    /// Perturbations drawn per explained instance.
    #[arg(long, default_value_t = 5000)]
    pub n_samples: usize,
    /// Seed for the perturbation draws.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Also write the ranked signed weights as an SVG bar chart.
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Fit surrogates over every feature instead of a saliency-selected
    /// subset. Required for the input-convex model, whose gradients
    /// saturate to constants.
    #[arg(long)]
    pub skip_saliency: bool,
    /// Explain only the first N instances.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Proximity-kernel width; defaults to 0.75 * sqrt(selected features).
    #[arg(long)]
    pub kernel_width: Option<f64>,
    /// Ridge penalty of the surrogate fit.
    #[arg(long, default_value_t = 1.0)]
    pub ridge_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainOutcome {
    /// Model-space names of the selected features, parallel to the global
    /// weight vectors.
    pub selected_names: Vec<String>,
    pub global: GlobalExplanation,
    pub mean_fidelity: f64,
    pub n_instances: usize,
}

pub fn run(args: &ExplainArgs, out: &mut dyn Write) -> Result<ExplainOutcome> {
    let model = ModelFile::load(&args.model)?;
    let data = read_csv(&args.input)?;
    let processed = apply_pipeline(&data, &model.pipeline_stats)?;
    let features = to_model_space(model.pca_model.as_ref(), &processed.to_matrix()?)?;

    let n_instances = match args.limit {
        Some(limit) => limit.min(features.rows()),
        None => features.rows(),
    };
    if n_instances == 0 {
        return Err(Error::EmptyInput("no instances to explain".into()));
    }
    let rows: Vec<Vec<f64>> = features
        .iter_rows()
        .take(n_instances)
        .map(<[f64]>::to_vec)
        .collect();
    let instances = Mat::from_rows(&rows);

    let d = model.architecture.input_dim;
    let selected: Vec<usize> = if args.skip_saliency {
        (0..d).collect()
    } else {
        if model.architecture.kind != NetworkKind::FeedForward {
            return Err(Error::InvalidConfig(
                "saliency ranking applies to the feed-forward model; \
                 pass --skip-saliency to explain this model over all features"
                    .into(),
            ));
        }
        let k = match args.top_k {
            Some(k) if k > d => {
                return Err(Error::InvalidConfig(format!(
                    "--top-k {k} exceeds the {d} model features"
                )))
            }
            Some(k) => k,
            None => d.min(20),
        };
        let ranking = saliency_ranking(&model.params, &model.architecture, &instances, k)?;
        writeln!(out, "saliency selected {k} of {d} features")?;
        ranking.selected
    };

    let mut config = LimeConfig::for_selected_count(selected.len(), args.seed);
    config.n_samples = args.n_samples;
    config.ridge_alpha = args.ridge_alpha;
    if let Some(width) = args.kernel_width {
        config.kernel_width = width;
    }
    let stds = model_space_stds(&model);

    let locals: Vec<LocalExplanation> = (0..n_instances)
        .map(|r| {
            lime_explain(
                &model.params,
                &model.architecture,
                instances.row(r),
                &selected,
                &config,
                &stds,
                r as u64,
            )
        })
        .collect::<Result<_>>()?;
    let global = global_aggregate(&locals)?;
    let mean_fidelity = locals.iter().map(|e| e.fidelity_r2).sum::<f64>() / locals.len() as f64;

    let names = model.model_space_names();
    let selected_names: Vec<String> = selected.iter().map(|&j| names[j].clone()).collect();
    let table: Vec<(String, f64, f64)> = global
        .ranking
        .iter()
        .map(|&pos| {
            (
                selected_names[pos].clone(),
                global.mean_signed[pos],
                global.importance[pos],
            )
        })
        .collect();
    writeln!(
        out,
        "explained {n_instances} instances ({} perturbations each)",
        config.n_samples
    )?;
    writeln!(out, "{}", report::explanation_table(&table))?;
    writeln!(out, "mean surrogate fit R^2: {mean_fidelity:.4}")?;

    if let Some(path) = &args.out_svg {
        let bars: Vec<(String, f64)> = table
            .iter()
            .map(|(name, signed, _)| (name.clone(), *signed))
            .collect();
        std::fs::write(
            path,
            svg::bar_chart("Mean feature effect on admit probability", &bars),
        )?;
        writeln!(out, "chart written to {}", path.display())?;
    }

    Ok(ExplainOutcome {
        selected_names,
        global,
        mean_fidelity,
        n_instances,
    })
}
