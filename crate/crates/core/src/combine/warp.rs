use super::flow::FlowField;
use crate::catalog::IGNORE;
use crate::error::{Error, Result};
use crate::label::{is_object, LabelMap};

/// Backward-warps `labels` (frame `f`) onto frame `f + 1`.
///
/// Each output pixel takes the label at its rounded flow-displaced source;
/// sources outside the frame give IGNORE.
pub fn warp_labels(labels: &LabelMap, flow: &FlowField) -> Result<LabelMap> {
    if labels.dims() != flow.dims() {
        return Err(Error::DimensionMismatch {
            expected: labels.dims(),
            found: flow.dims(),
        });
    }
    let (w, h) = labels.dims();
    let mut out = LabelMap::ignored(w, h);
    for y in 0..h {
        for x in 0..w {
            let [dx, dy] = flow.get(x, y);
            let sx = libm::round(x as f64 + dx);
            let sy = libm::round(y as f64 + dy);
            if sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64 {
                out.set(x, y, labels.get(sx as usize, sy as usize));
            }
        }
    }
    Ok(out)
}

/// Same-class agreement of object pixels: `|A| / |U|` where `A` holds pixels
/// with the same object label in both maps and `U` pixels that are object in
/// either. Pixels IGNORE in either map are skipped. An empty union scores 1.
pub fn object_overlap(warped: &LabelMap, next: &LabelMap) -> Result<f64> {
    next.ensure_dims(warped.dims())?;
    let mut agree = 0usize;
    let mut union = 0usize;
    for (&a, &b) in warped.as_slice().iter().zip(next.as_slice()) {
        if a == IGNORE || b == IGNORE {
            continue;
        }
        if is_object(a) || is_object(b) {
            union += 1;
            if a == b {
                agree += 1;
            }
        }
    }
    Ok(if union == 0 {
        1.0
    } else {
        agree as f64 / union as f64
    })
}
