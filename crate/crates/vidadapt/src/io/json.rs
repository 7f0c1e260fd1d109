use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{PathContext, Result};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).at(path)?;
    bytes.push(b'\n');
    super::write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).at(path)?;
    serde_json::from_slice(&bytes).at(path)
}
