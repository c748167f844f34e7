//! The two binary classifiers: a feed-forward network and a fully
//! input-convex network (FICNN) whose passthrough weights stay nonnegative
//! so each logit is convex in the input. Training is minibatch ADAM with an
//! explicit L2 loss term, optional inverted dropout (FICNN only), and a
//! clamp-to-zero projection after every step to maintain convexity.
//!
//! All randomness is seeded and all reductions use fixed summation order, so
//! a training run is a deterministic function of (spec, config, data, seed).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::{derive_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    FeedForward,
    Ficnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative as a function of the pre-activation. ReLU at exactly 0
    /// takes the 0 subgradient.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Network shape and activation choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: NetworkKind,
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub hidden_activations: Vec<Activation>,
    pub output_dim: usize,
    /// Inverted-dropout probability on FICNN hidden activations; must be 0
    /// for feed-forward networks.
    pub dropout_prob: f64,
}

impl ArchitectureSpec {
    /// Default feed-forward shape: input -> 256 (ReLU) -> 32 (tanh) -> 2.
    pub fn feed_forward(input_dim: usize) -> Self {
        ArchitectureSpec {
            kind: NetworkKind::FeedForward,
            input_dim,
            hidden_sizes: vec![256, 32],
            hidden_activations: vec![Activation::Relu, Activation::Tanh],
            output_dim: 2,
            dropout_prob: 0.0,
        }
    }

    /// Default input-convex shape: 512 and 16 ReLU layers, dropout 0.3.
    pub fn ficnn(input_dim: usize) -> Self {
        ArchitectureSpec {
            kind: NetworkKind::Ficnn,
            input_dim,
            hidden_sizes: vec![512, 16],
            hidden_activations: vec![Activation::Relu, Activation::Relu],
            output_dim: 2,
            dropout_prob: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        if self.output_dim != 2 {
            return Err(Error::InvalidConfig(format!(
                "output_dim must be 2 for the binary task, got {}",
                self.output_dim
            )));
        }
        if self.hidden_sizes.len() != self.hidden_activations.len() {
            return Err(Error::InvalidConfig(format!(
                "{} hidden sizes but {} activations",
                self.hidden_sizes.len(),
                self.hidden_activations.len()
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden layer sizes must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::InvalidConfig(format!(
                "dropout_prob {} outside [0, 1)",
                self.dropout_prob
            )));
        }
        match self.kind {
            NetworkKind::FeedForward => {
                if self.dropout_prob != 0.0 {
                    return Err(Error::InvalidConfig(
                        "dropout applies to the input-convex network only".into(),
                    ));
                }
            }
            NetworkKind::Ficnn => {
                // Convexity needs convex, non-decreasing activations.
                if self.hidden_activations.contains(&Activation::Tanh) {
                    return Err(Error::InvalidConfig(
                        "tanh is not convex; input-convex layers must use relu".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Hidden sizes followed by the output size.
    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = self.hidden_sizes.clone();
        sizes.push(self.output_dim);
        sizes
    }
}

/// All trainable parameters.
///
/// Feed-forward: `layer_weights[i]` maps layer i activations to layer i+1
/// (`passthrough_weights` is empty). FICNN: `layer_weights[i]` maps the raw
/// input to layer i+1 and `passthrough_weights[i]` maps hidden layer i to
/// layer i+1; the passthrough entries stay `>= 0` outside a single
/// optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub kind: NetworkKind,
    pub layer_weights: Vec<Mat>,
    pub passthrough_weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    fn zeros_like(&self) -> NetworkParams {
        NetworkParams {
            kind: self.kind,
            layer_weights: self
                .layer_weights
                .iter()
                .map(|w| Mat::zeros(w.rows(), w.cols()))
                .collect(),
            passthrough_weights: self
                .passthrough_weights
                .iter()
                .map(|w| Mat::zeros(w.rows(), w.cols()))
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Sum of squared weight entries (passthrough included, biases not).
    pub fn weight_sq_sum(&self) -> f64 {
        self.layer_weights
            .iter()
            .chain(&self.passthrough_weights)
            .map(Mat::sum_squares)
            .sum()
    }

    /// Checks that shapes agree with the architecture.
    pub fn matches(&self, spec: &ArchitectureSpec) -> Result<()> {
        if self.kind != spec.kind {
            return Err(Error::InvalidConfig(
                "network kind does not match architecture".into(),
            ));
        }
        let sizes = spec.layer_sizes();
        let n_layers = sizes.len();
        let expected_pass = match spec.kind {
            NetworkKind::FeedForward => 0,
            NetworkKind::Ficnn => n_layers - 1,
        };
        if self.layer_weights.len() != n_layers
            || self.biases.len() != n_layers
            || self.passthrough_weights.len() != expected_pass
        {
            return Err(Error::DimensionMismatch {
                expected: n_layers,
                actual: self.layer_weights.len(),
            });
        }
        for (i, w) in self.layer_weights.iter().enumerate() {
            let in_dim = match spec.kind {
                NetworkKind::FeedForward => {
                    if i == 0 {
                        spec.input_dim
                    } else {
                        sizes[i - 1]
                    }
                }
                NetworkKind::Ficnn => spec.input_dim,
            };
            if w.rows() != sizes[i] || w.cols() != in_dim || self.biases[i].len() != sizes[i] {
                return Err(Error::DimensionMismatch {
                    expected: sizes[i],
                    actual: w.rows(),
                });
            }
        }
        for (i, u) in self.passthrough_weights.iter().enumerate() {
            if u.rows() != sizes[i + 1] || u.cols() != sizes[i] {
                return Err(Error::DimensionMismatch {
                    expected: sizes[i + 1],
                    actual: u.rows(),
                });
            }
        }
        Ok(())
    }

    fn check_nonnegative_passthrough(&self) -> Result<()> {
        for (i, u) in self.passthrough_weights.iter().enumerate() {
            if u.data().iter().any(|&v| v < 0.0) {
                return Err(Error::ConvexityViolation(format!(
                    "passthrough weight matrix {i} has a negative entry"
                )));
            }
        }
        Ok(())
    }
}

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl TrainConfig {
    /// Published defaults: batch 64, learning rate 1e-3, 100 epochs, ADAM
    /// (0.9, 0.999, 1e-8), with per-kind L2 strength.
    pub fn for_kind(kind: NetworkKind, seed: u64) -> Self {
        TrainConfig {
            batch_size: 64,
            learning_rate: 0.001,
            l2_lambda: match kind {
                NetworkKind::FeedForward => 0.01,
                NetworkKind::Ficnn => 0.001,
            },
            epochs: 100,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::InvalidConfig("l2_lambda must be >= 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        for (name, beta) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!("{name} outside [0, 1)")));
            }
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::InvalidConfig("adam_epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// Whether dropout masks are sampled. `Train` carries the seed that makes
/// the masks (and therefore the whole step) reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Eval,
    Train { dropout_seed: u64 },
}

/// ADAM moment accumulators, shaped like the parameters they update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: NetworkParams,
    pub second_moment: NetworkParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        AdamState {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

/// Draws initial parameters: weights uniform in `±sqrt(6 / (fan_in +
/// fan_out))`, biases zero, and FICNN passthrough weights as the absolute
/// value of the draw so convexity holds from step 0.
pub fn init_params(spec: &ArchitectureSpec, seed: u64) -> Result<NetworkParams> {
    spec.validate()?;
    let mut rng = Rng::new(seed);
    let sizes = spec.layer_sizes();
    let mut draw = |rows: usize, cols: usize, fan_in: usize, fan_out: usize, abs: bool| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut m = Mat::zeros(rows, cols);
        for v in m.data_mut() {
            let x = rng.range_f64(-limit, limit);
            *v = if abs { x.abs() } else { x };
        }
        m
    };

    let mut layer_weights = Vec::with_capacity(sizes.len());
    let mut passthrough_weights = Vec::new();
    for (i, &out) in sizes.iter().enumerate() {
        match spec.kind {
            NetworkKind::FeedForward => {
                let fan_in = if i == 0 { spec.input_dim } else { sizes[i - 1] };
                layer_weights.push(draw(out, fan_in, fan_in, out, false));
            }
            NetworkKind::Ficnn => {
                if i > 0 {
                    passthrough_weights.push(draw(out, sizes[i - 1], sizes[i - 1], out, true));
                }
                layer_weights.push(draw(out, spec.input_dim, spec.input_dim, out, false));
            }
        }
    }
    Ok(NetworkParams {
        kind: spec.kind,
        layer_weights,
        passthrough_weights,
        biases: sizes.iter().map(|&s| vec![0.0; s]).collect(),
    })
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Everything the backward pass needs from a forward pass over a batch.
struct BatchTrace {
    /// Pre-activations per hidden layer, batch rows.
    hidden_pre: Vec<Mat>,
    /// Activations after the nonlinearity and any dropout scaling.
    hidden_post: Vec<Mat>,
    /// Dropout multipliers actually applied (empty in eval mode / FF).
    scales: Vec<Mat>,
    logits: Mat,
    probs: Mat,
}

fn forward_batch(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    x: &Mat,
    mode: ForwardMode,
) -> Result<BatchTrace> {
    params.matches(spec)?;
    if x.cols() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: x.cols(),
        });
    }
    if spec.kind == NetworkKind::Ficnn {
        params.check_nonnegative_passthrough()?;
    }
    let n = x.rows();
    let n_hidden = spec.hidden_sizes.len();
    let dropout = matches!(mode, ForwardMode::Train { .. })
        && spec.kind == NetworkKind::Ficnn
        && spec.dropout_prob > 0.0;

    let mut hidden_pre: Vec<Mat> = Vec::with_capacity(n_hidden);
    let mut hidden_post: Vec<Mat> = Vec::with_capacity(n_hidden);
    let mut scales: Vec<Mat> = if dropout {
        spec.hidden_sizes
            .iter()
            .map(|&s| Mat::zeros(n, s))
            .collect()
    } else {
        Vec::new()
    };

    // Masks are drawn per sample, sequentially across layers, so a batch
    // forward equals a sequence of single-sample forwards.
    if dropout {
        let ForwardMode::Train { dropout_seed } = mode else {
            unreachable!()
        };
        let keep_scale = 1.0 / (1.0 - spec.dropout_prob);
        for r in 0..n {
            let mut mask_rng = Rng::new(derive_seed(dropout_seed, r as u64));
            for layer in scales.iter_mut() {
                for v in layer.row_mut(r) {
                    *v = if mask_rng.next_f64() < spec.dropout_prob {
                        0.0
                    } else {
                        keep_scale
                    };
                }
            }
        }
    }

    for i in 0..n_hidden {
        let size = spec.hidden_sizes[i];
        let act = spec.hidden_activations[i];
        let mut pre = Mat::zeros(n, size);
        for r in 0..n {
            let mut row = match spec.kind {
                NetworkKind::FeedForward => {
                    let input = if i == 0 {
                        x.row(r)
                    } else {
                        hidden_post[i - 1].row(r)
                    };
                    params.layer_weights[i].matvec(input)
                }
                NetworkKind::Ficnn => {
                    let mut v = params.layer_weights[i].matvec(x.row(r));
                    if i > 0 {
                        let through =
                            params.passthrough_weights[i - 1].matvec(hidden_post[i - 1].row(r));
                        for (a, b) in v.iter_mut().zip(&through) {
                            *a += b;
                        }
                    }
                    v
                }
            };
            for (v, b) in row.iter_mut().zip(&params.biases[i]) {
                *v += b;
            }
            pre.row_mut(r).copy_from_slice(&row);
        }
        let mut post = pre.clone();
        for v in post.data_mut() {
            *v = act.apply(*v);
        }
        if dropout {
            for (p, s) in post.data_mut().iter_mut().zip(scales[i].data()) {
                *p *= s;
            }
        }
        hidden_pre.push(pre);
        hidden_post.push(post);
    }

    let out_idx = n_hidden;
    let mut logits = Mat::zeros(n, spec.output_dim);
    for r in 0..n {
        let mut row = match spec.kind {
            NetworkKind::FeedForward => {
                let input = if n_hidden == 0 {
                    x.row(r)
                } else {
                    hidden_post[n_hidden - 1].row(r)
                };
                params.layer_weights[out_idx].matvec(input)
            }
            NetworkKind::Ficnn => {
                let mut v = params.layer_weights[out_idx].matvec(x.row(r));
                if n_hidden > 0 {
                    let through = params.passthrough_weights[n_hidden - 1]
                        .matvec(hidden_post[n_hidden - 1].row(r));
                    for (a, b) in v.iter_mut().zip(&through) {
                        *a += b;
                    }
                }
                v
            }
        };
        for (v, b) in row.iter_mut().zip(&params.biases[out_idx]) {
            *v += b;
        }
        logits.row_mut(r).copy_from_slice(&row);
    }

    let mut probs = Mat::zeros(n, spec.output_dim);
    for r in 0..n {
        probs
            .row_mut(r)
            .copy_from_slice(&softmax_row(logits.row(r)));
    }
    Ok(BatchTrace {
        hidden_pre,
        hidden_post,
        scales,
        logits,
        probs,
    })
}

/// Single-sample forward pass for the feed-forward network.
pub fn forward_ff(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.kind != NetworkKind::FeedForward {
        return Err(Error::InvalidConfig(
            "forward_ff called with a non-feed-forward architecture".into(),
        ));
    }
    let batch = Mat::from_rows(&[x.to_vec()]);
    let trace = forward_batch(params, spec, &batch, ForwardMode::Eval)?;
    Ok((trace.logits.row(0).to_vec(), trace.probs.row(0).to_vec()))
}

/// Single-sample forward pass for the input-convex network. In eval mode
/// each logit is convex in `x`; train mode applies seeded inverted dropout.
pub fn forward_icnn(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    x: &[f64],
    mode: ForwardMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if spec.kind != NetworkKind::Ficnn {
        return Err(Error::InvalidConfig(
            "forward_icnn called with a non-input-convex architecture".into(),
        ));
    }
    let batch = Mat::from_rows(&[x.to_vec()]);
    let trace = forward_batch(params, spec, &batch, mode)?;
    Ok((trace.logits.row(0).to_vec(), trace.probs.row(0).to_vec()))
}

/// Mean negative log-likelihood of the true class plus `l2_lambda` times
/// the squared weight norm (biases excluded).
pub fn cross_entropy_loss(
    probs: &Mat,
    labels: &[u8],
    params: &NetworkParams,
    l2_lambda: f64,
) -> Result<f64> {
    if probs.rows() == 0 {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    if probs.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.rows(),
            actual: labels.len(),
        });
    }
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        total -= probs.get(r, label as usize).ln();
    }
    Ok(total / probs.rows() as f64 + l2_lambda * params.weight_sq_sum())
}

fn backward_with_loss(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    batch: &Mat,
    labels: &[u8],
    l2_lambda: f64,
    mode: ForwardMode,
) -> Result<(NetworkParams, f64)> {
    if batch.rows() == 0 {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    if batch.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.rows(),
            actual: labels.len(),
        });
    }
    let trace = forward_batch(params, spec, batch, mode)?;
    let loss = cross_entropy_loss(&trace.probs, labels, params, l2_lambda)?;

    let n = batch.rows();
    let n_hidden = spec.hidden_sizes.len();
    let mut grads = params.zeros_like();

    // Fused softmax + cross-entropy: dL/dlogits = (probs - one_hot) / n.
    let mut dlogits = trace.probs.clone();
    for (r, &label) in labels.iter().enumerate() {
        let row = dlogits.row_mut(r);
        row[label as usize] -= 1.0;
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }

    let out_idx = n_hidden;
    match spec.kind {
        NetworkKind::FeedForward => {
            // dcurrent holds dL/d(post-activation of the layer below).
            let mut dcurrent = Mat::zeros(
                n,
                if n_hidden == 0 {
                    0
                } else {
                    spec.hidden_sizes[n_hidden - 1]
                },
            );
            for r in 0..n {
                let input = if n_hidden == 0 {
                    batch.row(r)
                } else {
                    trace.hidden_post[n_hidden - 1].row(r)
                };
                grads.layer_weights[out_idx].add_outer(dlogits.row(r), input, 1.0);
                for (b, d) in grads.biases[out_idx].iter_mut().zip(dlogits.row(r)) {
                    *b += d;
                }
                if n_hidden > 0 {
                    let dh = params.layer_weights[out_idx].transpose_matvec(dlogits.row(r));
                    dcurrent.row_mut(r).copy_from_slice(&dh);
                }
            }
            for i in (0..n_hidden).rev() {
                let act = spec.hidden_activations[i];
                let mut dnext = Mat::zeros(n, if i == 0 { 0 } else { spec.hidden_sizes[i - 1] });
                for r in 0..n {
                    let mut dpre: Vec<f64> = dcurrent
                        .row(r)
                        .iter()
                        .zip(trace.hidden_pre[i].row(r))
                        .map(|(d, &pre)| d * act.derivative(pre))
                        .collect();
                    let input = if i == 0 {
                        batch.row(r)
                    } else {
                        trace.hidden_post[i - 1].row(r)
                    };
                    grads.layer_weights[i].add_outer(&dpre, input, 1.0);
                    for (b, d) in grads.biases[i].iter_mut().zip(&dpre) {
                        *b += d;
                    }
                    if i > 0 {
                        let dh = params.layer_weights[i].transpose_matvec(&dpre);
                        dnext.row_mut(r).copy_from_slice(&dh);
                    }
                    dpre.clear();
                }
                dcurrent = dnext;
            }
        }
        NetworkKind::Ficnn => {
            let mut dpost = Mat::zeros(
                n,
                if n_hidden == 0 {
                    0
                } else {
                    spec.hidden_sizes[n_hidden - 1]
                },
            );
            for r in 0..n {
                grads.layer_weights[out_idx].add_outer(dlogits.row(r), batch.row(r), 1.0);
                for (b, d) in grads.biases[out_idx].iter_mut().zip(dlogits.row(r)) {
                    *b += d;
                }
                if n_hidden > 0 {
                    grads.passthrough_weights[n_hidden - 1].add_outer(
                        dlogits.row(r),
                        trace.hidden_post[n_hidden - 1].row(r),
                        1.0,
                    );
                    let dh =
                        params.passthrough_weights[n_hidden - 1].transpose_matvec(dlogits.row(r));
                    dpost.row_mut(r).copy_from_slice(&dh);
                }
            }
            for i in (0..n_hidden).rev() {
                let act = spec.hidden_activations[i];
                let mut dpost_prev =
                    Mat::zeros(n, if i == 0 { 0 } else { spec.hidden_sizes[i - 1] });
                for r in 0..n {
                    let dpre: Vec<f64> = (0..spec.hidden_sizes[i])
                        .map(|j| {
                            let scale = if trace.scales.is_empty() {
                                1.0
                            } else {
                                trace.scales[i].get(r, j)
                            };
                            dpost.get(r, j) * scale * act.derivative(trace.hidden_pre[i].get(r, j))
                        })
                        .collect();
                    grads.layer_weights[i].add_outer(&dpre, batch.row(r), 1.0);
                    for (b, d) in grads.biases[i].iter_mut().zip(&dpre) {
                        *b += d;
                    }
                    if i > 0 {
                        grads.passthrough_weights[i - 1].add_outer(
                            &dpre,
                            trace.hidden_post[i - 1].row(r),
                            1.0,
                        );
                        let dh = params.passthrough_weights[i - 1].transpose_matvec(&dpre);
                        dpost_prev.row_mut(r).copy_from_slice(&dh);
                    }
                }
                dpost = dpost_prev;
            }
        }
    }

    if l2_lambda != 0.0 {
        for (g, w) in grads
            .layer_weights
            .iter_mut()
            .zip(&params.layer_weights)
            .chain(
                grads
                    .passthrough_weights
                    .iter_mut()
                    .zip(&params.passthrough_weights),
            )
        {
            g.add_scaled(w, 2.0 * l2_lambda);
        }
    }
    Ok((grads, loss))
}

/// Exact gradient of [`cross_entropy_loss`] with respect to every
/// parameter, shaped like the parameters themselves.
pub fn backward(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    batch: &Mat,
    labels: &[u8],
    l2_lambda: f64,
    mode: ForwardMode,
) -> Result<NetworkParams> {
    backward_with_loss(params, spec, batch, labels, l2_lambda, mode).map(|(g, _)| g)
}

/// One bias-corrected ADAM update; increments the step counter.
pub fn adam_step(
    params: &mut NetworkParams,
    state: &mut AdamState,
    grads: &NetworkParams,
    config: &TrainConfig,
) -> Result<()> {
    config.validate()?;
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.adam_beta1.powi(t);
    let bias2 = 1.0 - config.adam_beta2.powi(t);

    let update = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| -> Result<()> {
        if p.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: g.len(),
            });
        }
        for i in 0..p.len() {
            m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
            v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
        }
        Ok(())
    };

    for i in 0..params.layer_weights.len() {
        update(
            params.layer_weights[i].data_mut(),
            state.first_moment.layer_weights[i].data_mut(),
            state.second_moment.layer_weights[i].data_mut(),
            grads.layer_weights[i].data(),
        )?;
    }
    for i in 0..params.passthrough_weights.len() {
        update(
            params.passthrough_weights[i].data_mut(),
            state.first_moment.passthrough_weights[i].data_mut(),
            state.second_moment.passthrough_weights[i].data_mut(),
            grads.passthrough_weights[i].data(),
        )?;
    }
    for i in 0..params.biases.len() {
        let (m, v) = (
            &mut state.first_moment.biases[i],
            &mut state.second_moment.biases[i],
        );
        update(&mut params.biases[i], m, v, &grads.biases[i])?;
    }
    Ok(())
}

/// Clamps every negative passthrough entry to zero, restoring the FICNN
/// convexity invariant after an optimizer step. Layer weights and biases
/// are untouched. Errors on feed-forward parameters.
pub fn project_nonnegative(params: &mut NetworkParams) -> Result<()> {
    if params.kind != NetworkKind::Ficnn {
        return Err(Error::InvalidConfig(
            "projection applies to input-convex networks only".into(),
        ));
    }
    for u in &mut params.passthrough_weights {
        for v in u.data_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Ok(())
}

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

/// Trains a network with minibatch ADAM: seeded shuffle each epoch,
/// batches of `config.batch_size` (final partial batch kept), a projection
/// step after every update for FICNN. Returns the final parameters and the
/// per-epoch mean training loss.
pub fn train(
    spec: &ArchitectureSpec,
    config: &TrainConfig,
    data: &Mat,
    labels: &[u8],
) -> Result<(NetworkParams, Vec<f64>)> {
    spec.validate()?;
    config.validate()?;
    if data.rows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if data.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.rows(),
            actual: labels.len(),
        });
    }
    if data.cols() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: data.cols(),
        });
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    if data.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig(
            "training features must lie in [0, 1]; run the preprocessing pipeline first".into(),
        ));
    }

    let mut params = init_params(spec, derive_seed(config.seed, STREAM_INIT))?;
    let mut state = AdamState::new(&params);
    let mut shuffle_rng = Rng::from_stream(config.seed, STREAM_SHUFFLE);
    let dropout_base = derive_seed(config.seed, STREAM_DROPOUT);
    let use_dropout = spec.kind == NetworkKind::Ficnn && spec.dropout_prob > 0.0;

    let n = data.rows();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut batch_counter: u64 = 0;

    for _ in 0..config.epochs {
        shuffle_rng.shuffle(&mut indices);
        let mut epoch_loss = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            let mut batch = Mat::zeros(chunk.len(), data.cols());
            let mut batch_labels = Vec::with_capacity(chunk.len());
            for (r, &idx) in chunk.iter().enumerate() {
                batch.row_mut(r).copy_from_slice(data.row(idx));
                batch_labels.push(labels[idx]);
            }
            let mode = if use_dropout {
                ForwardMode::Train {
                    dropout_seed: derive_seed(dropout_base, batch_counter),
                }
            } else {
                ForwardMode::Eval
            };
            batch_counter += 1;

            let (grads, loss) =
                backward_with_loss(&params, spec, &batch, &batch_labels, config.l2_lambda, mode)?;
            adam_step(&mut params, &mut state, &grads, config)?;
            if spec.kind == NetworkKind::Ficnn {
                project_nonnegative(&mut params)?;
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        loss_trace.push(epoch_loss / n as f64);
    }
    Ok((params, loss_trace))
}

/// Eval-mode probabilities and argmax labels for each row. Exact ties
/// predict class 0.
pub fn predict(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    data: &Mat,
) -> Result<(Mat, Vec<u8>)> {
    let trace = forward_batch(params, spec, data, ForwardMode::Eval)?;
    let labels = (0..trace.probs.rows())
        .map(|r| u8::from(trace.probs.get(r, 1) > trace.probs.get(r, 0)))
        .collect();
    Ok((trace.probs, labels))
}

/// Exact gradient of the class-1 logit with respect to the input, in eval
/// mode. This is the sensitivity measure used for saliency rankings.
pub fn input_gradient(
    params: &NetworkParams,
    spec: &ArchitectureSpec,
    x: &[f64],
) -> Result<Vec<f64>> {
    let batch = Mat::from_rows(&[x.to_vec()]);
    let trace = forward_batch(params, spec, &batch, ForwardMode::Eval)?;
    let n_hidden = spec.hidden_sizes.len();
    let out_idx = n_hidden;

    match spec.kind {
        NetworkKind::FeedForward => {
            if n_hidden == 0 {
                return Ok(params.layer_weights[out_idx].row(1).to_vec());
            }
            let mut dh = params.layer_weights[out_idx].row(1).to_vec();
            for i in (0..n_hidden).rev() {
                let act = spec.hidden_activations[i];
                let dpre: Vec<f64> = dh
                    .iter()
                    .zip(trace.hidden_pre[i].row(0))
                    .map(|(d, &pre)| d * act.derivative(pre))
                    .collect();
                dh = params.layer_weights[i].transpose_matvec(&dpre);
            }
            Ok(dh)
        }
        NetworkKind::Ficnn => {
            let mut dx = params.layer_weights[out_idx].row(1).to_vec();
            if n_hidden == 0 {
                return Ok(dx);
            }
            let mut dpost = params.passthrough_weights[n_hidden - 1].row(1).to_vec();
            for i in (0..n_hidden).rev() {
                let act = spec.hidden_activations[i];
                let dpre: Vec<f64> = dpost
                    .iter()
                    .zip(trace.hidden_pre[i].row(0))
                    .map(|(d, &pre)| d * act.derivative(pre))
                    .collect();
                let via_input = params.layer_weights[i].transpose_matvec(&dpre);
                for (a, b) in dx.iter_mut().zip(&via_input) {
                    *a += b;
                }
                if i > 0 {
                    dpost = params.passthrough_weights[i - 1].transpose_matvec(&dpre);
                }
            }
            Ok(dx)
        }
    }
}
