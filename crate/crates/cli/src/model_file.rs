//! Persistence of a trained model as one self-describing JSON file:
//! architecture, weights, the fitted preprocessing pipeline, the optional
//! PCA transform, and the training configuration that produced it all.
//! Floats serialize as shortest-round-trip decimals, so a load/save cycle
//! is value-identical and loaded models predict bit-for-bit like the
//! in-memory originals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use admitlens_core::error::{Error, Result};
use admitlens_core::linalg::Mat;
use admitlens_core::nn::{ArchitectureSpec, NetworkParams, TrainConfig};
use admitlens_core::pca::{project, PcaModel};
use admitlens_core::tabular::PipelineStats;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub architecture: ArchitectureSpec,
    pub params: NetworkParams,
    pub pipeline_stats: PipelineStats,
    pub pca_model: Option<PcaModel>,
    pub train_config: TrainConfig,
    /// Post-pipeline feature names, identical to the fitted column order.
    pub feature_names: Vec<String>,
    pub created_seed: u64,
}

impl ModelFile {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.architecture.validate()?;
        self.params.matches(&self.architecture)?;
        self.pipeline_stats.validate()?;
        if self.feature_names != self.pipeline_stats.fitted_column_order {
            return Err(Error::SchemaMismatch(
                "feature_names do not match the fitted column order".into(),
            ));
        }
        match &self.pca_model {
            None => {
                if self.feature_names.len() != self.architecture.input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.architecture.input_dim,
                        actual: self.feature_names.len(),
                    });
                }
            }
            Some(pca) => {
                pca.validate()?;
                if self.feature_names.len() != pca.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: pca.input_dim(),
                        actual: self.feature_names.len(),
                    });
                }
                if pca.output_dim() != self.architecture.input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.architecture.input_dim,
                        actual: pca.output_dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("model serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    /// Names of the features the network actually consumes: principal
    /// components when PCA is present, pipeline columns otherwise.
    pub fn model_space_names(&self) -> Vec<String> {
        match &self.pca_model {
            Some(pca) => (1..=pca.output_dim())
                .map(|i| format!("pc_{i:02}"))
                .collect(),
            None => self.feature_names.clone(),
        }
    }
}

/// Maps pipeline output into the network's input space. Without PCA this
/// is the identity. With PCA, projections are squeezed into the unit cube:
/// a centered [0,1]^d point has norm at most sqrt(d), so by Cauchy-Schwarz
/// every coordinate along a unit component lies in [-sqrt(d), sqrt(d)] and
/// z / (2 sqrt(d)) + 1/2 lands in [0,1]. The map is fixed by the input
/// dimension alone, so replaying it needs no extra persisted statistics.
pub fn to_model_space(pca: Option<&PcaModel>, features: &Mat) -> Result<Mat> {
    let Some(pca) = pca else {
        return Ok(features.clone());
    };
    let mut projected = project(pca, features)?;
    let half_span = (pca.input_dim() as f64).sqrt();
    for v in projected.data_mut() {
        *v = (*v / (2.0 * half_span) + 0.5).clamp(0.0, 1.0);
    }
    Ok(projected)
}

/// Per-feature standard deviation of training data in the network's input
/// space, used to scale explanation perturbations. Without PCA the final
/// min-max stage maps a unit-variance column through 1/(max - min); with
/// PCA the component variances are the eigenvalues, scaled by the unit
/// cube squeeze.
pub fn model_space_stds(model: &ModelFile) -> Vec<f64> {
    match &model.pca_model {
        Some(pca) => {
            let scale = 2.0 * (pca.input_dim() as f64).sqrt();
            pca.eigenvalues.iter().map(|l| l.sqrt() / scale).collect()
        }
        None => model
            .pipeline_stats
            .column_stats
            .iter()
            .map(|cs| {
                if cs.max > cs.min {
                    1.0 / (cs.max - cs.min)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use admitlens_core::pca::{fit_pca, Retain};
    use admitlens_core::rng::Rng;

    #[test]
    fn projection_squeeze_stays_in_unit_cube() {
        let mut rng = Rng::new(3);
        let mut rows = Vec::new();
        for _ in 0..40 {
            rows.push((0..6).map(|_| rng.next_f64()).collect::<Vec<f64>>());
        }
        let x = Mat::from_rows(&rows);
        let pca = fit_pca(&x, Retain::Components(4)).unwrap();
        let mapped = to_model_space(Some(&pca), &x).unwrap();
        assert_eq!(mapped.rows(), 40);
        assert_eq!(mapped.cols(), 4);
        assert!(mapped.data().iter().all(|v| (0.0..=1.0).contains(v)));

        // Extreme corners of the cube still map inside it.
        let corners = Mat::from_rows(&[vec![0.0; 6], vec![1.0; 6]]);
        let mapped = to_model_space(Some(&pca), &corners).unwrap();
        assert!(mapped.data().iter().all(|v| (0.0..=1.0).contains(v)));

        let identity = to_model_space(None, &x).unwrap();
        assert_eq!(identity, x);
    }
}
