use alloc::vec;
use alloc::vec::Vec;

use super::features::{features_at, FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::prob::ProbabilityVolume;

/// Weights of the linear softmax classifier plus its SGD momentum buffer.
///
/// Both matrices are `K x FEATURE_DIM`, row-major, one row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    num_classes: usize,
    weights: Vec<f64>,
    momentum: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(num_classes: usize) -> Self {
        Self {
            num_classes,
            weights: vec![0.0; num_classes * FEATURE_DIM],
            momentum: vec![0.0; num_classes * FEATURE_DIM],
        }
    }

    /// Weights with a zeroed momentum buffer.
    pub fn from_weights(num_classes: usize, weights: Vec<f64>) -> Result<Self> {
        let momentum = vec![0.0; weights.len()];
        Self::from_parts(num_classes, weights, momentum)
    }

    pub fn from_parts(num_classes: usize, weights: Vec<f64>, momentum: Vec<f64>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(alloc::format!(
                "model needs at least 2 classes, got {num_classes}"
            )));
        }
        for (what, v) in [("weights", &weights), ("momentum", &momentum)] {
            if v.len() != num_classes * FEATURE_DIM {
                return Err(Error::Config(alloc::format!(
                    "{what}: expected {} values for {num_classes} classes, got {}",
                    num_classes * FEATURE_DIM,
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(alloc::format!(
                    "{what} contain non-finite values"
                )));
            }
        }
        Ok(Self {
            num_classes,
            weights,
            momentum,
        })
    }

    /// Nearest-prototype classifier on color.
    ///
    /// Class `c` scores `-s/2 * (|rgb - mu_c|^2 + |mean_rgb - mu_c|^2)` up to a
    /// term shared by all classes, which is linear in the features.
    pub fn from_prototypes(colors: &[[f64; 3]], sharpness: f64) -> Result<Self> {
        let k = colors.len();
        let mut weights = vec![0.0; k * FEATURE_DIM];
        for (c, mu) in colors.iter().enumerate() {
            let row = &mut weights[c * FEATURE_DIM..(c + 1) * FEATURE_DIM];
            let norm2: f64 = mu.iter().map(|v| v * v).sum();
            for ch in 0..3 {
                row[ch] = sharpness * mu[ch];
                row[5 + ch] = sharpness * mu[ch];
            }
            row[FEATURE_DIM - 1] = -sharpness * norm2;
        }
        Self::from_weights(k, weights)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub(crate) fn weights_and_momentum_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.momentum)
    }

    pub fn row(&self, class_id: usize) -> &[f64] {
        &self.weights[class_id * FEATURE_DIM..(class_id + 1) * FEATURE_DIM]
    }

    /// Returns a copy with every weight multiplied by `factor`; momentum is kept.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_classes: self.num_classes,
            weights: self.weights.iter().map(|w| w * factor).collect(),
            momentum: self.momentum.clone(),
        }
    }

    /// Class probabilities for one feature vector, written into `out`.
    pub(crate) fn softmax_into(&self, features: &FeatureVector, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[c * FEATURE_DIM..(c + 1) * FEATURE_DIM];
            *slot = row.iter().zip(features).map(|(w, f)| w * f).sum();
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in out.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in out.iter_mut() {
            *v /= sum;
        }
    }
}

/// Softmax class probabilities for every pixel of `image`.
pub fn predict(params: &ModelParameters, image: &Image) -> Result<ProbabilityVolume> {
    let k = params.num_classes();
    if params.weights().len() != k * FEATURE_DIM {
        return Err(Error::Config(
            "parameter shape does not match class count".into(),
        ));
    }
    let mut data = vec![0.0; image.len() * k];
    let mut i = 0;
    for y in 0..image.height() {
        for x in 0..image.width() {
            let f = features_at(image, x, y);
            params.softmax_into(&f, &mut data[i * k..(i + 1) * k]);
            i += 1;
        }
    }
    Ok(ProbabilityVolume::from_raw(
        image.width(),
        image.height(),
        k,
        data,
    ))
}
