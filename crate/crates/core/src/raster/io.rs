//! Image and depth-map file formats.
//!
//! Masks: 8-bit grayscale PNG, 0 background, 255 foreground (values >= 128
//! read as foreground). Index maps: 8-bit grayscale PNG when every id fits a
//! byte, else 16-bit. Depth maps: `SFDEPTH1` magic, width and height as
//! little-endian u32, then row-major f32 little-endian depths with +inf as
//! background.

use super::buffers::{BinaryMask, DepthMap, IndexMap};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const DEPTH_MAGIC: &[u8; 8] = b"SFDEPTH1";

fn image_err(path: &Path, e: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<()> {
    let img = image::GrayImage::from_fn(mask.width, mask.height, |x, y| {
        image::Luma([if mask.get(x, y) { 255u8 } else { 0u8 }])
    });
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}

pub fn read_mask_png(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path).map_err(|e| image_err(path, e))?.into_luma8();
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        img.get_pixel(x, y).0[0] >= 128
    }))
}

/// PNG bytes of a mask, for wire protocols.
pub fn mask_png_bytes(mask: &BinaryMask) -> Result<Vec<u8>> {
    let img = image::GrayImage::from_fn(mask.width, mask.height, |x, y| {
        image::Luma([if mask.get(x, y) { 255u8 } else { 0u8 }])
    });
    let mut bytes = Vec::new();
    img.write_to(
        &mut std::io::Cursor::new(&mut bytes),
        image::ImageFormat::Png,
    )
    .map_err(|e| image_err(Path::new("<memory>"), e))?;
    Ok(bytes)
}

pub fn mask_from_png_bytes(bytes: &[u8]) -> Result<BinaryMask> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| image_err(Path::new("<memory>"), e))?
        .into_luma8();
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        img.get_pixel(x, y).0[0] >= 128
    }))
}

pub fn write_index_png(path: &Path, index: &IndexMap) -> Result<()> {
    let max_id = index.data().iter().copied().max().unwrap_or(0);
    if max_id <= u8::MAX as u32 {
        let img = image::GrayImage::from_fn(index.width, index.height, |x, y| {
            image::Luma([index.get(x, y) as u8])
        });
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_err(path, e))
    } else if max_id <= u16::MAX as u32 {
        let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(
            index.width,
            index.height,
            |x, y| image::Luma([index.get(x, y) as u16]),
        );
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_err(path, e))
    } else {
        Err(Error::Configuration(format!(
            "instance id {max_id} does not fit a 16-bit index image"
        )))
    }
}

pub fn read_index_png(path: &Path) -> Result<IndexMap> {
    let dynimg = image::open(path).map_err(|e| image_err(path, e))?;
    let mut out = IndexMap::new(dynimg.width(), dynimg.height());
    match dynimg {
        image::DynamicImage::ImageLuma16(img) => {
            for (x, y, p) in img.enumerate_pixels() {
                out.set(x, y, p.0[0] as u32);
            }
        }
        other => {
            let img = other.into_luma8();
            for (x, y, p) in img.enumerate_pixels() {
                out.set(x, y, p.0[0] as u32);
            }
        }
    }
    Ok(out)
}

pub fn write_depth_to<W: Write>(mut w: W, depth: &DepthMap) -> std::io::Result<()> {
    w.write_all(DEPTH_MAGIC)?;
    w.write_all(&depth.width.to_le_bytes())?;
    w.write_all(&depth.height.to_le_bytes())?;
    for &d in depth.data() {
        w.write_all(&(d as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_depth_from<R: Read>(mut r: R) -> Result<DepthMap> {
    let path = Path::new("<depth stream>");
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != DEPTH_MAGIC {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "bad depth-map magic".into(),
        });
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(|e| Error::io(path, e))?;
    let width = u32::from_le_bytes(b4);
    r.read_exact(&mut b4).map_err(|e| Error::io(path, e))?;
    let height = u32::from_le_bytes(b4);
    let mut out = DepthMap::new(width, height);
    for y in 0..height {
        for x in 0..width {
            r.read_exact(&mut b4).map_err(|e| Error::io(path, e))?;
            out.set(x, y, f32::from_le_bytes(b4) as f64);
        }
    }
    Ok(out)
}

pub fn write_depth_bin(path: &Path, depth: &DepthMap) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_depth_to(std::io::BufWriter::new(f), depth).map_err(|e| Error::io(path, e))
}

pub fn read_depth_bin(path: &Path) -> Result<DepthMap> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_depth_from(std::io::BufReader::new(f))
}

/// Grayscale preview: finite depths mapped linearly to 64..=255 (near =
/// bright), background 0.
pub fn write_depth_preview_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let finite: Vec<f64> = depth.data().iter().copied().filter(|d| d.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    let span = (hi - lo).max(1e-12);
    let img = image::GrayImage::from_fn(depth.width, depth.height, |x, y| {
        let d = depth.get(x, y);
        if d.is_finite() {
            let t = (d - lo) / span;
            image::Luma([(255.0 - t * 191.0) as u8])
        } else {
            image::Luma([0u8])
        }
    });
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))
}
