use std::path::Path;

use image::{GrayImage, Luma};
use vidadapt_core::eval::GroundTruth;
use vidadapt_core::LabelMap;

use super::{contiguous_files, ensure_dir, frame_file_name, indexed_files};
use crate::error::{Error, PathContext, Result};

/// Reads an 8-bit single-channel PNG label map; 255 is IGNORE.
pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let img = image::open(path).at(path)?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "label maps must be 8-bit grayscale, found {:?}",
                    other.color()
                ),
            })
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    Ok(LabelMap::from_vec(w, h, gray.into_raw())?)
}

pub fn write_label_map(path: &Path, labels: &LabelMap) -> Result<()> {
    let img = GrayImage::from_fn(labels.width() as u32, labels.height() as u32, |x, y| {
        Luma([labels.get(x as usize, y as usize)])
    });
    img.save(path).at(path)
}

/// Reads a dense sequence `frame_000000.png ...` of label maps.
pub fn read_label_dir(dir: &Path) -> Result<Vec<LabelMap>> {
    contiguous_files(dir, "frame", &["png"])?
        .iter()
        .map(|p| read_label_map(p))
        .collect()
}

pub fn write_label_dir(dir: &Path, maps: &[LabelMap]) -> Result<()> {
    ensure_dir(dir)?;
    for (f, map) in maps.iter().enumerate() {
        write_label_map(&dir.join(frame_file_name(f, "png")), map)?;
    }
    Ok(())
}

/// Reads sparse annotations: any subset of `frame_NNNNNN.png`.
pub fn read_ground_truth(dir: &Path) -> Result<GroundTruth> {
    let mut gt = GroundTruth::new();
    for (frame, path) in indexed_files(dir, "frame", &["png"])? {
        gt.insert(frame, read_label_map(&path)?);
    }
    if gt.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: "no annotated frames".into(),
        });
    }
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vidadapt_core::IGNORE;

    #[test]
    fn round_trip_keeps_ignore() {
        let dir = tempfile::tempdir().unwrap();
        let map = LabelMap::from_vec(3, 2, vec![0, 1, 2, IGNORE, 7, 0]).unwrap();
        write_label_dir(dir.path(), std::slice::from_ref(&map)).unwrap();
        assert_eq!(read_label_dir(dir.path()).unwrap(), vec![map]);
    }

    #[test]
    fn sparse_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let map = LabelMap::filled(2, 2, 1);
        write_label_map(&dir.path().join("frame_000010.png"), &map).unwrap();
        write_label_map(&dir.path().join("frame_000000.png"), &map).unwrap();
        let gt = read_ground_truth(dir.path()).unwrap();
        assert_eq!(gt.iter().map(|(f, _)| f).collect::<Vec<_>>(), vec![0, 10]);
    }

    #[test]
    fn rgb_label_png_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame_000000.png");
        image::RgbImage::new(2, 2).save(&path).unwrap();
        assert!(matches!(read_label_map(&path), Err(Error::Format { .. })));
    }
}
