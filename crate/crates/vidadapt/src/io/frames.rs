use std::path::Path;

use image::{Rgb, RgbImage};
use vidadapt_core::Image;

use super::{contiguous_files, ensure_dir, frame_file_name};
use crate::error::{Error, PathContext, Result};

/// Reads a PNG or PPM frame as RGB with channels scaled to [0, 1].
pub fn read_frame(path: &Path) -> Result<Image> {
    let rgb = image::open(path).at(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb
        .pixels()
        .map(|Rgb(p)| {
            [
                p[0] as f64 / 255.0,
                p[1] as f64 / 255.0,
                p[2] as f64 / 255.0,
            ]
        })
        .collect();
    Ok(Image::new(w, h, pixels)?)
}

/// Writes an 8-bit RGB PNG. Frames read by [`read_frame`] round-trip
/// exactly.
pub fn write_frame(path: &Path, frame: &Image) -> Result<()> {
    let to_u8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out = RgbImage::new(frame.width() as u32, frame.height() as u32);
    for (dst, src) in out.pixels_mut().zip(frame.pixels()) {
        *dst = Rgb([to_u8(src[0]), to_u8(src[1]), to_u8(src[2])]);
    }
    out.save(path).at(path)
}

/// Reads `frame_000000.png`, `frame_000001.png`, ... (PNG or PPM) from `dir`.
pub fn read_video(dir: &Path) -> Result<Vec<Image>> {
    let files = contiguous_files(dir, "frame", &["png", "ppm"])?;
    let mut frames = Vec::with_capacity(files.len());
    for path in &files {
        let frame = read_frame(path)?;
        if let Some(first) = frames.first().map(Image::dims) {
            if frame.dims() != first {
                return Err(Error::Format {
                    path: path.clone(),
                    message: format!("frame is {:?}, first frame is {first:?}", frame.dims()),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn write_video(dir: &Path, frames: &[Image]) -> Result<()> {
    ensure_dir(dir)?;
    for (f, frame) in frames.iter().enumerate() {
        write_frame(&dir.join(frame_file_name(f, "png")), frame)?;
    }
    Ok(())
}
