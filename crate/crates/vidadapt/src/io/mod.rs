//! On-disk formats.
//!
//! Directory conventions: frames are `frame_%06d.png` (or `.ppm`), label maps
//! are single-channel 8-bit `frame_%06d.png`, flows between frame `f` and
//! `f + 1` are `flow_%06d.flo`. Frame indices start at 0.

mod catalog;
mod flow;
mod frames;
mod json;
mod labels;
mod params;
mod probs;

pub use catalog::{read_catalog, write_catalog};
pub use flow::{read_flo, read_flow_dir, write_flo, FLO_MAGIC};
pub use frames::{read_frame, read_video, write_frame, write_video};
pub use json::{read_json, write_json};
pub use labels::{
    read_ground_truth, read_label_dir, read_label_map, write_label_dir, write_label_map,
};
pub use params::{read_params, write_params};
pub use probs::{read_probs, write_probs, ProbsHeader};

use std::path::{Path, PathBuf};

use crate::error::{Error, PathContext, Result};

pub fn frame_file_name(frame: usize, ext: &str) -> String {
    format!("frame_{frame:06}.{ext}")
}

/// Parses the index out of `frame_000123.ext`.
pub fn parse_frame_index(name: &str, prefix: &str) -> Option<usize> {
    let stem = name.strip_prefix(prefix)?.strip_prefix('_')?;
    let digits = stem.split('.').next()?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Indexed files `<prefix>_NNNNNN.<ext>` in `dir` with one of `exts`, sorted.
pub(crate) fn indexed_files(
    dir: &Path,
    prefix: &str,
    exts: &[&str],
) -> Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if !ext_ok {
            continue;
        }
        if let Some(index) = parse_frame_index(name, prefix) {
            out.push((index, path));
        }
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: format!("two files for index {}", w[0].0),
        });
    }
    Ok(out)
}

/// Like [`indexed_files`] but requires indices `0..n` without gaps.
pub(crate) fn contiguous_files(dir: &Path, prefix: &str, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let files = indexed_files(dir, prefix, exts)?;
    if files.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: format!("no {prefix}_NNNNNN.{} files", exts.join("|")),
        });
    }
    for (expected, (index, path)) in files.iter().enumerate() {
        if *index != expected {
            return Err(Error::Format {
                path: path.clone(),
                message: format!("expected index {expected}; indices must start at 0 without gaps"),
            });
        }
    }
    Ok(files.into_iter().map(|(_, p)| p).collect())
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).at(dir)
}

/// Writes through a temporary sibling and renames, so readers polling for
/// `path` never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).at(&tmp)?;
    std::fs::rename(&tmp, path).at(path)
}
