use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{luma, Image};

/// Number of features per pixel.
pub const FEATURE_DIM: usize = 10;

/// `[r, g, b, x/W, y/H, mean_r, mean_g, mean_b, |grad L|, 1]`.
///
/// The means are over the edge-clamped 3x3 neighborhood; the gradient is the
/// central difference of luma, also edge-clamped.
pub type FeatureVector = [f64; FEATURE_DIM];

/// Features of the pixel at `(x, y)`.
pub fn extract_features(image: &Image, x: usize, y: usize) -> Result<FeatureVector> {
    if x >= image.width() || y >= image.height() {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(features_at(image, x, y))
}

#[inline]
pub(crate) fn features_at(image: &Image, x: usize, y: usize) -> FeatureVector {
    let (xi, yi) = (x as isize, y as isize);
    let [r, g, b] = image.get(x, y);

    let mut mean = [0.0; 3];
    for dy in -1..=1 {
        for dx in -1..=1 {
            let p = image.get_clamped(xi + dx, yi + dy);
            for c in 0..3 {
                mean[c] += p[c];
            }
        }
    }
    for m in &mut mean {
        *m /= 9.0;
    }

    let gx = (luma(image.get_clamped(xi + 1, yi)) - luma(image.get_clamped(xi - 1, yi))) / 2.0;
    let gy = (luma(image.get_clamped(xi, yi + 1)) - luma(image.get_clamped(xi, yi - 1))) / 2.0;
    let grad = libm::sqrt(gx * gx + gy * gy);

    [
        r,
        g,
        b,
        x as f64 / image.width() as f64,
        y as f64 / image.height() as f64,
        mean[0],
        mean[1],
        mean[2],
        grad,
        1.0,
    ]
}

/// Features for every pixel of an image, row-major.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    features: Vec<FeatureVector>,
}

impl FeatureMap {
    pub fn compute(image: &Image) -> Self {
        let mut features = Vec::with_capacity(image.len());
        for y in 0..image.height() {
            for x in 0..image.width() {
                features.push(features_at(image, x, y));
            }
        }
        Self {
            width: image.width(),
            height: image.height(),
            features,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, index: usize) -> &FeatureVector {
        &self.features[index]
    }

    pub fn as_slice(&self) -> &[FeatureVector] {
        &self.features
    }
}
