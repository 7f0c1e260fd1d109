//! Reference model parameters: `VAPM`, u32 version (1), u32 classes,
//! u32 feature dimension, then weights and momentum as f64, little endian.

use std::path::Path;

use vidadapt_core::model::FEATURE_DIM;
use vidadapt_core::ModelParameters;

use crate::error::{Error, PathContext, Result};

const MAGIC: &[u8; 4] = b"VAPM";
const VERSION: u32 = 1;

pub fn write_params(path: &Path, params: &ModelParameters) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + 16 * params.weights().len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(params.num_classes() as u32).to_le_bytes());
    bytes.extend_from_slice(&(FEATURE_DIM as u32).to_le_bytes());
    for v in params.weights().iter().chain(params.momentum()) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    super::write_atomic(path, &bytes)
}

pub fn read_params(path: &Path) -> Result<ModelParameters> {
    let bytes = std::fs::read(path).at(path)?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 16 || &bytes[0..4] != MAGIC {
        return Err(bad("not a VAPM parameter file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    if word(4) != VERSION as usize {
        return Err(bad(format!("unsupported version {}", word(4))));
    }
    let (k, d) = (word(8), word(12));
    if d != FEATURE_DIM {
        return Err(bad(format!(
            "feature dimension {d}, expected {FEATURE_DIM}"
        )));
    }
    let n = k * d;
    if bytes.len() != 16 + 16 * n {
        return Err(bad(format!(
            "expected {} bytes for {k} classes, found {}",
            16 + 16 * n,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (weights, momentum) = values.split_at(n);
    ModelParameters::from_parts(k, weights.to_vec(), momentum.to_vec())
        .map_err(|e| bad(e.to_string()))
}
