//! Small filesystem helpers shared by the writers.

use std::fs;
use std::path::Path;

use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline. Output is byte-stable for equal
/// values because every map in the crate is ordered.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::image(path, e))?;
    match img {
        image::DynamicImage::ImageRgb8(rgb) => Ok(rgb),
        other => Err(Error::InvalidArgument(format!(
            "{}: expected 8-bit 3-channel PNG, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::image(path, e))
}
