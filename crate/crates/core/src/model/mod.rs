//! The adaptable per-pixel classifier.
//!
//! The reference model is a linear softmax classifier over a small set of
//! handcrafted per-pixel features. Anything else that can produce class
//! probabilities and be fine-tuned on pseudo-labels can take its place by
//! implementing [`Segmenter`].

mod features;
mod loss;
mod params;
mod segmenter;
mod train;

pub use features::{extract_features, FeatureMap, FeatureVector, FEATURE_DIM};
pub use loss::{masked_cross_entropy, masked_cross_entropy_gradient};
pub use params::{predict, ModelParameters};
pub use segmenter::{ReferenceSegmenter, Segmenter, TrainingExample};
pub use train::{sgd_fine_tune, TrainConfig, BATCH_SIZE};

use crate::label::LabelMap;
use crate::prob::ProbabilityVolume;

/// Per-pixel argmax of a probability volume, ties to the lowest class index.
pub fn argmax_labels(prob: &ProbabilityVolume) -> LabelMap {
    prob.argmax_labels()
}
