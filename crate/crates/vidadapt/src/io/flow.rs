//! Middlebury `.flo`: float32 magic 202021.25, int32 width, int32 height,
//! then `width * height` interleaved (u, v) float32 pairs, little endian.

use std::path::Path;

use vidadapt_core::combine::FlowField;

use super::indexed_files;
use crate::error::{Error, PathContext, Result};

pub const FLO_MAGIC: f32 = 202021.25;

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = std::fs::read(path).at(path)?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 12 {
        return Err(bad(format!(
            "{} bytes is too short for a header",
            bytes.len()
        )));
    }
    let word = |i: usize| <[u8; 4]>::try_from(&bytes[i..i + 4]).unwrap();
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(bad(format!("bad magic {magic}")));
    }
    let (w, h) = (i32::from_le_bytes(word(4)), i32::from_le_bytes(word(8)));
    if w <= 0 || h <= 0 {
        return Err(bad(format!("invalid size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + w * h * 8;
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for {w}x{h}, found {}",
            bytes.len()
        )));
    }
    let vectors = bytes[12..]
        .chunks_exact(8)
        .map(|c| {
            let u = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let v = f32::from_le_bytes(c[4..8].try_into().unwrap());
            [u as f64, v as f64]
        })
        .collect();
    FlowField::new(w, h, vectors).map_err(|e| bad(e.to_string()))
}

/// Vectors are stored as `f32`.
pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    let (w, h) = flow.dims();
    let mut bytes = Vec::with_capacity(12 + w * h * 8);
    bytes.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    bytes.extend_from_slice(&(w as i32).to_le_bytes());
    bytes.extend_from_slice(&(h as i32).to_le_bytes());
    for [u, v] in flow.vectors() {
        bytes.extend_from_slice(&(*u as f32).to_le_bytes());
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::write(path, bytes).at(path)
}

/// Reads `flow_000000.flo .. flow_{n-2}.flo` for a video of `frames` frames.
pub fn read_flow_dir(dir: &Path, frames: usize) -> Result<Vec<FlowField>> {
    let files = indexed_files(dir, "flow", &["flo"])?;
    let needed = frames.saturating_sub(1);
    let mut out = Vec::with_capacity(needed);
    for f in 0..needed {
        let path = files
            .iter()
            .find(|(i, _)| *i == f)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::Format {
                path: dir.to_path_buf(),
                message: format!("missing flow_{f:06}.flo"),
            })?;
        out.push(read_flo(path)?);
    }
    Ok(out)
}
