use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::{BACKGROUND, IGNORE};
use crate::error::{Error, Result};

/// Per-pixel class labels, row-major. Values are class indices or [`IGNORE`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn ignored(width: usize, height: usize) -> Self {
        Self::filled(width, height, IGNORE)
    }

    pub fn from_vec(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// Checks that every non-IGNORE label is a valid class index.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        match self
            .labels
            .iter()
            .position(|&l| l != IGNORE && l as usize >= num_classes)
        {
            Some(i) => Err(Error::Invalid(alloc::format!(
                "label {} at pixel {i} is not a class of a {num_classes}-class catalog",
                self.labels[i]
            ))),
            None => Ok(()),
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

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.labels
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        self.labels[y * self.width + x] = label;
    }

    /// Number of pixels carrying an object label.
    pub fn object_pixel_count(&self) -> usize {
        self.labels.iter().filter(|&&l| is_object(l)).count()
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            });
        }
        Ok(())
    }
}

/// True for labels that name an object class (not background, not IGNORE).
#[inline]
pub fn is_object(label: u8) -> bool {
    label != BACKGROUND && label != IGNORE
}
