use alloc::vec;
use alloc::vec::Vec;

use super::features::{features_at, FEATURE_DIM};
use super::params::ModelParameters;
use crate::catalog::IGNORE;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::label::LabelMap;
use crate::prob::ProbabilityVolume;

/// Probabilities are clamped to this before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Mean negative log-likelihood of `target` over its non-IGNORE pixels.
///
/// Returns 0 when every pixel is IGNORE.
pub fn masked_cross_entropy(prob: &ProbabilityVolume, target: &LabelMap) -> Result<f64> {
    target.ensure_dims(prob.dims())?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, &label) in target.as_slice().iter().enumerate() {
        if label == IGNORE {
            continue;
        }
        if label as usize >= prob.num_classes() {
            return Err(Error::Invalid(alloc::format!(
                "target label {label} at pixel {i} exceeds class count {}",
                prob.num_classes()
            )));
        }
        total -= libm::log(prob.prob(i, label).max(LOG_FLOOR));
        count += 1;
    }
    Ok(if count == 0 {
        0.0
    } else {
        total / count as f64
    })
}

/// Loss and its gradient with respect to the weights (row-major `K x D`).
///
/// `pixels` restricts the average to the given pixel indices; IGNORE pixels
/// among them are skipped. `None` means every pixel of the frame.
pub fn masked_cross_entropy_gradient(
    params: &ModelParameters,
    image: &Image,
    target: &LabelMap,
    pixels: Option<&[usize]>,
) -> Result<(f64, Vec<f64>)> {
    target.ensure_dims(image.dims())?;
    target.validate(params.num_classes())?;
    let mut grad = vec![0.0; params.num_classes() * FEATURE_DIM];
    let loss = match pixels {
        Some(ix) => accumulate(params, image, target, ix.iter().copied(), &mut grad),
        None => accumulate(params, image, target, 0..target.len(), &mut grad),
    };
    Ok((loss, grad))
}

/// Sums the softmax cross-entropy gradient over `pixels`, then divides by the
/// number of labeled pixels visited. Returns the mean loss.
pub(crate) fn accumulate(
    params: &ModelParameters,
    image: &Image,
    target: &LabelMap,
    pixels: impl Iterator<Item = usize>,
    grad: &mut [f64],
) -> f64 {
    let k = params.num_classes();
    let width = image.width();
    let mut probs = vec![0.0; k];
    let mut loss = 0.0;
    let mut count = 0usize;
    for i in pixels {
        let label = target.as_slice()[i];
        if label == IGNORE {
            continue;
        }
        let f = features_at(image, i % width, i / width);
        params.softmax_into(&f, &mut probs);
        loss -= libm::log(probs[label as usize].max(LOG_FLOOR));
        for (c, &p) in probs.iter().enumerate() {
            let delta = p - if c == label as usize { 1.0 } else { 0.0 };
            let row = &mut grad[c * FEATURE_DIM..(c + 1) * FEATURE_DIM];
            for (g, x) in row.iter_mut().zip(&f) {
                *g += delta * x;
            }
        }
        count += 1;
    }
    if count > 0 {
        let n = count as f64;
        for g in grad.iter_mut() {
            *g /= n;
        }
        loss / n
    } else {
        0.0
    }
}
