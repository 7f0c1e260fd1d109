use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An RGB frame with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(alloc::format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if let Some(i) = pixels
            .iter()
            .position(|p| p.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::Invalid(alloc::format!(
                "pixel {i} has a channel outside [0, 1]: {:?}",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from a per-pixel function; values are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let [r, g, b] = f(x, y);
                pixels.push([clamp01(r), clamp01(g), clamp01(b)]);
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
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
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image edge.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> [f64; 3] {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Rec. 601 luma of every pixel, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| luma(p)).collect()
    }
}

#[inline]
pub fn luma([r, g, b]: [f64; 3]) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

#[inline]
fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range_and_size() {
        assert!(Image::new(0, 1, Vec::new()).is_err());
        assert!(Image::new(1, 1, alloc::vec![[0.0, 1.5, 0.0]]).is_err());
        assert!(Image::new(1, 1, alloc::vec![[0.0, f64::NAN, 0.0]]).is_err());
        assert!(Image::new(2, 1, alloc::vec![[0.0; 3]]).is_err());
        let img = Image::from_fn(2, 2, |x, y| [x as f64 * 2.0, -1.0, y as f64]).unwrap();
        assert_eq!(img.get(1, 1), [1.0, 0.0, 1.0]);
        assert_eq!(img.get_clamped(-5, 7), img.get(0, 1));
    }
}
