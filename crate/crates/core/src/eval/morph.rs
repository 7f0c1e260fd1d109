use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::label::{is_object, LabelMap};

/// Binary closing with a `(2r + 1)`-square structuring element.
///
/// Dilation only looks at pixels inside the frame; erosion treats pixels
/// outside the frame as set. The pair is adjoint, so the closing is
/// extensive and idempotent.
pub fn close_mask(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let dilated = sweep(mask, width, height, radius, true);
    sweep(&dilated, width, height, radius, false)
}

/// Separable square filter: `any` for dilation, `all` for erosion.
fn sweep(mask: &[bool], width: usize, height: usize, radius: usize, dilate: bool) -> Vec<bool> {
    let pass = |src: &[bool], horizontal: bool| -> Vec<bool> {
        let mut out = vec![false; src.len()];
        for y in 0..height {
            for x in 0..width {
                let (pos, len) = if horizontal { (x, width) } else { (y, height) };
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(len - 1);
                let at = |p: usize| {
                    if horizontal {
                        src[y * width + p]
                    } else {
                        src[p * width + x]
                    }
                };
                out[y * width + x] = if dilate {
                    (lo..=hi).any(at)
                } else {
                    (lo..=hi).all(at)
                };
            }
        }
        out
    };
    let rows = pass(mask, true);
    pass(&rows, false)
}

/// Per-class closing of object regions.
///
/// Classes present in the map are closed in ascending order and written
/// back; where closings of two classes overlap, the higher class wins.
/// Radius 0 returns the map unchanged.
pub fn refine_morphological(labels: &LabelMap, radius: usize) -> LabelMap {
    if radius == 0 {
        return labels.clone();
    }
    let (w, h) = labels.dims();
    let classes: BTreeSet<u8> = labels
        .as_slice()
        .iter()
        .copied()
        .filter(|&l| is_object(l))
        .collect();
    let mut out = labels.clone();
    for class in classes {
        let mask: Vec<bool> = labels.as_slice().iter().map(|&l| l == class).collect();
        for (slot, set) in out
            .as_mut_slice()
            .iter_mut()
            .zip(close_mask(&mask, w, h, radius))
        {
            if set {
                *slot = class;
            }
        }
    }
    out
}
