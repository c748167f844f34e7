//! Interpretability stack: gradient-saliency feature selection, local
//! surrogate explanations of single predictions, and their aggregation
//! into a global feature ranking.
//!
//! The local method is tabular LIME: perturb the selected features of an
//! instance with Gaussian noise, query the model's class probability at
//! each perturbed point, weight the points by an exponential proximity
//! kernel, and fit a weighted ridge regression whose coefficients are the
//! explanation. Everything downstream of a seed is deterministic, and each
//! instance uses its own derived RNG stream, so explaining instances in
//! any order (or concurrently) gives identical results.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Mat};
use crate::nn::{input_gradient, predict, ArchitectureSpec, NetworkParams};
use crate::rng::{derive_seed, Rng};

/// Per-feature mean absolute input gradient, plus the chosen top-k subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyRanking {
    /// Mean |d logit₁ / d x_j| over the scoring rows; all entries >= 0.
    pub scores: Vec<f64>,
    /// k unique feature indices, sorted by score descending, ties by
    /// lower index.
    pub selected: Vec<usize>,
}

/// Knobs for the local surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub ridge_alpha: f64,
    pub seed: u64,
    /// Which class probability the surrogate explains.
    pub target_class: usize,
}

/// Default proximity-kernel width for explanations over `n_selected`
/// features.
pub fn default_kernel_width(n_selected: usize) -> f64 {
    0.75 * (n_selected as f64).sqrt()
}

impl LimeConfig {
    /// Defaults: 5000 perturbations, kernel width 0.75·sqrt(k), ridge
    /// alpha 1.0, explain class 1.
    pub fn for_selected_count(n_selected: usize, seed: u64) -> Self {
        LimeConfig {
            n_samples: 5000,
            kernel_width: default_kernel_width(n_selected),
            ridge_alpha: 1.0,
            seed,
            target_class: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be at least 10, got {}",
                self.n_samples
            )));
        }
        if self.kernel_width.is_nan() || self.kernel_width <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "kernel_width must be positive, got {}",
                self.kernel_width
            )));
        }
        if self.ridge_alpha.is_nan() || self.ridge_alpha < 0.0 {
            return Err(Error::InvalidConfig(
                "ridge_alpha must be nonnegative".into(),
            ));
        }
        if self.target_class > 1 {
            return Err(Error::InvalidConfig(format!(
                "target_class must be 0 or 1, got {}",
                self.target_class
            )));
        }
        Ok(())
    }
}

/// Surrogate fit for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExplanation {
    pub instance_id: u64,
    /// Signed surrogate coefficients, one per selected feature.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Weighted R² of the surrogate on the perturbation set; <= 1.
    pub fidelity_r2: f64,
}

/// Mean behavior of local explanations across many instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalExplanation {
    /// Mean signed weight per selected feature; positive pushes toward
    /// class 1.
    pub mean_signed: Vec<f64>,
    /// Mean absolute weight per selected feature; >= |mean_signed| by
    /// Jensen's inequality.
    pub importance: Vec<f64>,
    /// Positions into the weight vectors, sorted by importance
    /// descending, ties by lower position.
    pub ranking: Vec<usize>,
}

fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Scores every feature by mean absolute gradient of the class-1 logit
/// over `data` rows and selects the top k.
pub fn saliency_ranking(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    data: &Mat,
    k: usize,
) -> Result<SaliencyRanking> {
    if data.rows() == 0 {
        return Err(Error::EmptyInput("no rows to score saliency on".into()));
    }
    let d = spec.input_dim;
    if k == 0 || k > d {
        return Err(Error::InvalidConfig(format!(
            "selection size {k} outside 1..={d}"
        )));
    }
    let mut scores = vec![0.0; d];
    for row in data.iter_rows() {
        let grad = input_gradient(params, spec, row)?;
        for (s, g) in scores.iter_mut().zip(&grad) {
            *s += g.abs();
        }
    }
    for s in &mut scores {
        *s /= data.rows() as f64;
    }
    let selected = rank_desc(&scores)[..k].to_vec();
    Ok(SaliencyRanking { scores, selected })
}

/// Draws the perturbation set for one instance: row 0 is the instance
/// itself, later rows add per-feature Gaussian noise with the given
/// training-data standard deviations, clamped to [0, 1].
pub fn sample_perturbations(
    instance: &[f64],
    n_samples: usize,
    seed: u64,
    feature_stds: &[f64],
) -> Result<Mat> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be positive".into()));
    }
    if feature_stds.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            actual: feature_stds.len(),
        });
    }
    if feature_stds.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidConfig(
            "feature standard deviations must be nonnegative".into(),
        ));
    }
    let mut rng = Rng::new(seed);
    let mut out = Mat::zeros(n_samples, instance.len());
    out.row_mut(0).copy_from_slice(instance);
    for r in 1..n_samples {
        for (j, v) in out.row_mut(r).iter_mut().enumerate() {
            *v = (instance[j] + rng.gaussian() * feature_stds[j]).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Exponential proximity kernel: exp(−distance² / kernel_width²). Equals
/// 1 at distance 0 and decreases strictly with distance.
pub fn proximity_weight(distance: f64, kernel_width: f64) -> f64 {
    debug_assert!(distance >= 0.0 && kernel_width > 0.0);
    (-(distance * distance) / (kernel_width * kernel_width)).exp()
}

/// Solves min_β Σᵢ wᵢ (yᵢ − design_row·β)² + alpha·Σ_{penalized j} βⱼ² via
/// the normal equations. The caller marks which columns the ridge
/// penalty applies to.
fn weighted_normal_solve(
    design: &Mat,
    y: &[f64],
    w: &[f64],
    alpha: f64,
    penalized: &[bool],
) -> Result<Vec<f64>> {
    let m = design.cols();
    debug_assert_eq!(penalized.len(), m);
    let mut a = Mat::zeros(m, m);
    let mut b = vec![0.0; m];
    for (r, row) in design.iter_rows().enumerate() {
        if w[r] == 0.0 {
            continue;
        }
        for i in 0..m {
            let wi = w[r] * row[i];
            if wi == 0.0 {
                continue;
            }
            let upper = &mut a.data_mut()[i * m + i..(i + 1) * m];
            for (dest, &rj) in upper.iter_mut().zip(&row[i..]) {
                *dest += wi * rj;
            }
            b[i] += wi * y[r];
        }
    }
    for (i, &ridge_this) in penalized.iter().enumerate() {
        for j in 0..i {
            let v = a.get(j, i);
            a.set(i, j, v);
        }
        if ridge_this {
            let v = a.get(i, i) + alpha;
            a.set(i, i, v);
        }
    }
    cholesky_solve(&a, &b).map_err(|e| match e {
        Error::SingularSystem(_) if alpha == 0.0 => Error::SingularSystem(
            "normal equations are singular; use a ridge penalty alpha > 0".into(),
        ),
        other => other,
    })
}

/// Weighted ridge regression with an unpenalized intercept. Returns
/// (coefficients, intercept, weighted R²); R² is defined as 1 when the
/// weighted response variance is zero.
pub fn weighted_ridge_fit(
    x: &Mat,
    y: &[f64],
    w: &[f64],
    alpha: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = x.rows();
    let k = x.cols();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w.len(),
        });
    }
    if n < k + 1 {
        return Err(Error::InvalidConfig(format!(
            "ridge fit needs at least {} rows for {k} features, got {n}",
            k + 1
        )));
    }
    if w.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig(
            "sample weights must be nonnegative".into(),
        ));
    }
    if !w.iter().any(|&v| v > 0.0) {
        return Err(Error::DegenerateInput("all sample weights are zero".into()));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidConfig("alpha must be nonnegative".into()));
    }

    let mut design = Mat::zeros(n, k + 1);
    for (r, row) in x.iter_rows().enumerate() {
        let dest = design.row_mut(r);
        dest[..k].copy_from_slice(row);
        dest[k] = 1.0;
    }
    let mut penalized = vec![true; k + 1];
    penalized[k] = false;
    let solution = weighted_normal_solve(&design, y, w, alpha, &penalized)?;
    let (coefficients, intercept) = (solution[..k].to_vec(), solution[k]);

    let w_sum: f64 = w.iter().sum();
    let y_mean = y.iter().zip(w).map(|(yi, wi)| yi * wi).sum::<f64>() / w_sum;
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for (r, row) in x.iter_rows().enumerate() {
        let fitted = crate::linalg::dot(&coefficients, row) + intercept;
        ss_tot += w[r] * (y[r] - y_mean) * (y[r] - y_mean);
        ss_res += w[r] * (y[r] - fitted) * (y[r] - fitted);
    }
    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let r2 = if ss_tot <= 1e-24 * w_sum * y_scale * y_scale {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((coefficients, intercept, r2))
}

/// Explains one prediction: perturbs the selected features around the
/// instance, queries the model's target-class probability, and fits a
/// proximity-weighted ridge surrogate over the selected coordinates.
/// Unselected features are held at their instance values. The RNG stream
/// is derived from (config.seed, instance_id), so explanations are
/// order-independent.
pub fn lime_explain(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    instance: &[f64],
    selected_features: &[usize],
    config: &LimeConfig,
    feature_stds: &[f64],
    instance_id: u64,
) -> Result<LocalExplanation> {
    config.validate()?;
    if instance.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: instance.len(),
        });
    }
    if feature_stds.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            actual: feature_stds.len(),
        });
    }
    if selected_features.is_empty() {
        return Err(Error::EmptyInput("no features selected".into()));
    }
    let mut seen = vec![false; instance.len()];
    for &j in selected_features {
        if j >= instance.len() {
            return Err(Error::InvalidConfig(format!(
                "selected feature index {j} out of range for {} features",
                instance.len()
            )));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidConfig(format!(
                "selected feature index {j} appears twice"
            )));
        }
    }
    if instance.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig(
            "instance features must lie in [0, 1]".into(),
        ));
    }

    let sub_instance: Vec<f64> = selected_features.iter().map(|&j| instance[j]).collect();
    let sub_stds: Vec<f64> = selected_features.iter().map(|&j| feature_stds[j]).collect();
    let perturbations = sample_perturbations(
        &sub_instance,
        config.n_samples,
        derive_seed(config.seed, instance_id),
        &sub_stds,
    )?;

    let mut queries = Mat::zeros(config.n_samples, instance.len());
    for r in 0..config.n_samples {
        queries.row_mut(r).copy_from_slice(instance);
        for (slot, &j) in selected_features.iter().enumerate() {
            queries.row_mut(r)[j] = perturbations.get(r, slot);
        }
    }
    let (probs, _) = predict(params, spec, &queries)?;
    let y: Vec<f64> = (0..config.n_samples)
        .map(|r| probs.get(r, config.target_class))
        .collect();

    let weights: Vec<f64> = perturbations
        .iter_rows()
        .map(|row| {
            let mut sq = 0.0;
            for (slot, &v) in row.iter().enumerate() {
                if sub_stds[slot] > 0.0 {
                    let z = (v - sub_instance[slot]) / sub_stds[slot];
                    sq += z * z;
                }
            }
            proximity_weight(sq.sqrt(), config.kernel_width)
        })
        .collect();

    let (coefficients, intercept, fidelity_r2) =
        weighted_ridge_fit(&perturbations, &y, &weights, config.ridge_alpha)?;
    Ok(LocalExplanation {
        instance_id,
        weights: coefficients,
        intercept,
        fidelity_r2,
    })
}

/// Averages local explanations into mean signed weights and mean
/// absolute importances, ranked by importance.
pub fn global_aggregate(explanations: &[LocalExplanation]) -> Result<GlobalExplanation> {
    let Some(first) = explanations.first() else {
        return Err(Error::EmptyInput("no explanations to aggregate".into()));
    };
    let k = first.weights.len();
    for e in explanations {
        if e.weights.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: e.weights.len(),
            });
        }
    }
    let n = explanations.len() as f64;
    let mut mean_signed = vec![0.0; k];
    let mut importance = vec![0.0; k];
    for e in explanations {
        for (j, &w) in e.weights.iter().enumerate() {
            mean_signed[j] += w / n;
            importance[j] += w.abs() / n;
        }
    }
    let ranking = rank_desc(&importance);
    Ok(GlobalExplanation {
        mean_signed,
        importance,
        ranking,
    })
}
