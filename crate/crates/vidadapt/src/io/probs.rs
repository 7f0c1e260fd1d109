//! Probability volumes exchanged with external models:
//! `frame_%06d.f32` holds class-planar little-endian f32 values
//! (all pixels of class 0, then class 1, ...), `frame_%06d.json` the header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vidadapt_core::ProbabilityVolume;

use super::{frame_file_name, write_atomic};
use crate::error::{Error, PathContext, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbsHeader {
    pub width: usize,
    pub height: usize,
    pub num_classes: usize,
    pub dtype: String,
    pub layout: String,
}

impl ProbsHeader {
    pub fn for_volume(prob: &ProbabilityVolume) -> Self {
        Self {
            width: prob.width(),
            height: prob.height(),
            num_classes: prob.num_classes(),
            dtype: "f32le".into(),
            layout: "planar".into(),
        }
    }
}

fn paths(dir: &Path, frame: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(frame_file_name(frame, "f32")),
        dir.join(frame_file_name(frame, "json")),
    )
}

/// Writes the data file before the header so a header implies complete data.
pub fn write_probs(dir: &Path, frame: usize, prob: &ProbabilityVolume) -> Result<()> {
    let (data_path, header_path) = paths(dir, frame);
    let (n, k) = (prob.num_pixels(), prob.num_classes());
    let mut bytes = Vec::with_capacity(n * k * 4);
    for c in 0..k {
        for i in 0..n {
            bytes.extend_from_slice(&(prob.pixel(i)[c] as f32).to_le_bytes());
        }
    }
    write_atomic(&data_path, &bytes)?;
    let header = serde_json::to_vec_pretty(&ProbsHeader::for_volume(prob)).at(&header_path)?;
    write_atomic(&header_path, &header)
}

/// Reads and validates one frame's volume. Values must lie in [0, 1] and
/// every pixel must sum to 1 within `tolerance`.
pub fn read_probs(
    dir: &Path,
    frame: usize,
    expected: (usize, usize),
    tolerance: f64,
) -> Result<ProbabilityVolume> {
    let (data_path, header_path) = paths(dir, frame);
    let malformed = |message: String| Error::MalformedHeader {
        path: header_path.clone(),
        message,
    };
    let raw = std::fs::read(&header_path).at(&header_path)?;
    let header: ProbsHeader = serde_json::from_slice(&raw).map_err(|e| malformed(e.to_string()))?;
    if header.dtype != "f32le" || header.layout != "planar" {
        return Err(malformed(format!(
            "unsupported dtype/layout {}/{}, expected f32le/planar",
            header.dtype, header.layout
        )));
    }
    if (header.width, header.height) != expected {
        return Err(malformed(format!(
            "size {}x{} does not match the frame's {}x{}",
            header.width, header.height, expected.0, expected.1
        )));
    }
    if header.num_classes < 2 {
        return Err(malformed(format!("{} classes", header.num_classes)));
    }
    let (n, k) = (header.width * header.height, header.num_classes);
    let bytes = std::fs::read(&data_path).at(&data_path)?;
    if bytes.len() != n * k * 4 {
        return Err(Error::Format {
            path: data_path,
            message: format!("expected {} bytes, found {}", n * k * 4, bytes.len()),
        });
    }
    let mut data = vec![0.0; n * k];
    for (j, chunk) in bytes.chunks_exact(4).enumerate() {
        let (c, i) = (j / n, j % n);
        data[i * k + c] = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
    }
    for i in 0..n {
        let px = &data[i * k..(i + 1) * k];
        let sum: f64 = px.iter().sum();
        if !px.iter().all(|p| (0.0..=1.0).contains(p)) || !((sum - 1.0).abs() <= tolerance) {
            return Err(Error::ProbabilitySum {
                frame,
                pixel: i,
                sum,
                tolerance,
            });
        }
    }
    Ok(ProbabilityVolume::from_vec_with_tolerance(
        header.width,
        header.height,
        k,
        data,
        tolerance,
    )?)
}
