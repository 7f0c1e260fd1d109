use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::accumulate;
use super::params::ModelParameters;
use super::segmenter::TrainingExample;
use crate::catalog::IGNORE;
use crate::error::{Error, Result};

/// Frames per SGD step. Fine-tuning always works on one frame at a time.
pub const BATCH_SIZE: usize = 1;

/// Hyperparameters of [`sgd_fine_tune`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Number of SGD steps; `None` means one pass over the dataset.
    pub iterations: Option<usize>,
    /// Labeled pixels sampled per step; 0 uses every labeled pixel.
    pub pixel_subsample: usize,
    pub seed: u64,
    /// Visit frames in a seeded random order per pass instead of insertion order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.9,
            weight_decay: 0.0005,
            iterations: None,
            pixel_subsample: 4096,
            seed: 0,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(alloc::format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn steps_for(&self, dataset_len: usize) -> usize {
        self.iterations.unwrap_or(dataset_len)
    }
}

/// Fine-tunes a copy of `params` on `dataset` with momentum SGD.
///
/// Step `j` trains on one frame (entry `j mod n`, or a seeded permutation per
/// pass when shuffling). It samples up to `pixel_subsample` labeled pixels
/// without replacement and applies
///
/// ```text
/// v <- momentum * v - lr * (grad + weight_decay * w)
/// w <- w + v
/// ```
///
/// A step whose frame has no labeled pixel is skipped, so a dataset of
/// all-IGNORE maps leaves the parameters untouched.
#[must_use = "the fine-tuned parameters are returned, the input is untouched"]
pub fn sgd_fine_tune(
    params: &ModelParameters,
    dataset: &[TrainingExample<'_>],
    config: &TrainConfig,
) -> Result<ModelParameters> {
    config.validate()?;
    for ex in dataset {
        ex.labels.ensure_dims(ex.image.dims())?;
        ex.labels.validate(params.num_classes())?;
    }
    let mut out = params.clone();
    if dataset.is_empty() {
        return Ok(out);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grad = vec![0.0; out.weights().len()];

    for step in 0..config.steps_for(dataset.len()) {
        let pos = step % dataset.len();
        if config.shuffle && pos == 0 {
            order.shuffle(&mut rng);
        }
        let example = &dataset[order[pos]];

        let labeled: Vec<usize> = example
            .labels
            .as_slice()
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l != IGNORE)
            .map(|(i, _)| i)
            .collect();
        if labeled.is_empty() {
            continue;
        }
        let sampled: Vec<usize> =
            if config.pixel_subsample == 0 || config.pixel_subsample >= labeled.len() {
                labeled
            } else {
                let mut picks =
                    rand::seq::index::sample(&mut rng, labeled.len(), config.pixel_subsample)
                        .into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|j| labeled[j]).collect()
            };

        grad.iter_mut().for_each(|g| *g = 0.0);
        accumulate(
            &out,
            example.image,
            example.labels,
            sampled.into_iter(),
            &mut grad,
        );

        let (weights, velocity) = out.weights_and_momentum_mut();
        for ((w, v), g) in weights.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            *v = config.momentum * *v - config.learning_rate * (g + config.weight_decay * *w);
            *w += *v;
        }
    }
    Ok(out)
}
