//! Core library for the admission-prediction pipeline: essay feature
//! extraction, tabular preprocessing, PCA, feed-forward and input-convex
//! neural classifiers, saliency/LIME explanations, and evaluation metrics.
//!
//! Everything is deterministic given a seed: random state comes from
//! [`rng::Rng`], floating-point reductions use fixed summation order, and no
//! iteration over hash maps ever reaches an observable result.

pub mod error;
pub mod explain;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod pca;
pub mod rng;
pub mod tabular;
pub mod textfeat;

pub use error::{Error, Result};
pub use linalg::Mat;
