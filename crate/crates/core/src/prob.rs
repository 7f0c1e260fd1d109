use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::LabelMap;

/// Tolerance on the per-pixel channel sum for volumes produced in-process.
pub const SUM_TOLERANCE: f64 = 1e-5;

/// Per-pixel class probabilities. Stored pixel-major: the `K` channels of a
/// pixel are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume {
    width: usize,
    height: usize,
    num_classes: usize,
    data: Vec<f64>,
}

impl ProbabilityVolume {
    pub fn uniform(width: usize, height: usize, num_classes: usize) -> Self {
        Self {
            width,
            height,
            num_classes,
            data: vec![1.0 / num_classes as f64; width * height * num_classes],
        }
    }

    /// Validates range and normalization with [`SUM_TOLERANCE`].
    pub fn from_vec(
        width: usize,
        height: usize,
        num_classes: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        Self::from_vec_with_tolerance(width, height, num_classes, data, SUM_TOLERANCE)
    }

    pub fn from_vec_with_tolerance(
        width: usize,
        height: usize,
        num_classes: usize,
        data: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Invalid(
                "probability volume needs at least one class".into(),
            ));
        }
        if data.len() != width * height * num_classes {
            return Err(Error::LengthMismatch {
                expected: width * height * num_classes,
                found: data.len(),
            });
        }
        let vol = Self {
            width,
            height,
            num_classes,
            data,
        };
        if let Some((pixel, sum)) = vol.first_violation(tolerance) {
            return Err(Error::Invalid(alloc::format!(
                "pixel {pixel} has channel sum {sum} or a value outside [0, 1]"
            )));
        }
        Ok(vol)
    }

    /// First pixel whose channels leave `[0, 1]` or whose sum is off by more
    /// than `tolerance`, with its channel sum.
    pub fn first_violation(&self, tolerance: f64) -> Option<(usize, f64)> {
        self.data
            .chunks_exact(self.num_classes)
            .enumerate()
            .find_map(|(i, px)| {
                let sum: f64 = px.iter().sum();
                let in_range = px.iter().all(|v| (0.0..=1.0).contains(v));
                (!in_range || !((sum - 1.0).abs() <= tolerance)).then_some((i, sum))
            })
    }

    /// Wraps already-normalized data without re-checking.
    pub(crate) fn from_raw(
        width: usize,
        height: usize,
        num_classes: usize,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * num_classes);
        Self {
            width,
            height,
            num_classes,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Channel values of one pixel.
    #[inline]
    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.num_classes..(index + 1) * self.num_classes]
    }

    #[inline]
    pub fn pixel_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.num_classes..(index + 1) * self.num_classes]
    }

    #[inline]
    pub fn prob(&self, index: usize, class_id: u8) -> f64 {
        self.data[index * self.num_classes + class_id as usize]
    }

    /// Per-pixel argmax; ties go to the lowest class index.
    pub fn argmax_labels(&self) -> LabelMap {
        let labels = self
            .data
            .chunks_exact(self.num_classes)
            .map(|px| {
                let mut best = 0;
                for (c, &p) in px.iter().enumerate().skip(1) {
                    if p > px[best] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect();
        LabelMap::from_vec(self.width, self.height, labels).expect("length matches by construction")
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: dims,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_unnormalized() {
        assert!(ProbabilityVolume::from_vec(1, 1, 2, vec![0.5, 0.4]).is_err());
        assert!(ProbabilityVolume::from_vec(1, 1, 2, vec![1.2, -0.2]).is_err());
        assert!(ProbabilityVolume::from_vec(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(
            ProbabilityVolume::from_vec_with_tolerance(1, 1, 2, vec![0.5, 0.4995], 1e-3).is_ok()
        );
    }

    #[test]
    fn argmax_uniform_is_background() {
        let vol = ProbabilityVolume::uniform(3, 2, 4);
        assert!(vol.argmax_labels().as_slice().iter().all(|&l| l == 0));
    }

    #[test]
    fn argmax_unique_max() {
        let vol = ProbabilityVolume::from_vec(1, 1, 3, vec![0.1, 0.7, 0.2]).unwrap();
        assert_eq!(vol.argmax_labels().as_slice(), &[1]);
    }

    #[test]
    fn argmax_tie_breaks_low() {
        let vol = ProbabilityVolume::from_vec(1, 1, 3, vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(vol.argmax_labels().as_slice(), &[1]);
    }
}
