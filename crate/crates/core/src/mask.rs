use std::path::Path;

use image::GrayImage;

use crate::classes::CodeTable;
use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle; `x..x+width`, `y..y+height`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl PixelRect {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self::new(0, 0, width, height)
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn right(&self) -> u32 {
        self.x + self.width
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.height
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.right() && y < self.bottom()
    }

    pub fn within(&self, width: u32, height: u32) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    /// Grows the rectangle by `pad_x`/`pad_y` on every side, clamped to a
    /// `width`×`height` image.
    pub fn expand_clamped(&self, pad_x: u32, pad_y: u32, width: u32, height: u32) -> Self {
        let x0 = self.x.saturating_sub(pad_x);
        let y0 = self.y.saturating_sub(pad_y);
        let x1 = (self.right() + pad_x).min(width);
        let y1 = (self.bottom() + pad_y).min(height);
        Self::new(x0, y0, x1 - x0, y1 - y0)
    }
}

/// Single-channel 8-bit label raster declared against one [`CodeTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskLayer {
    width: u32,
    height: u32,
    table: CodeTable,
    codes: Vec<u8>,
}

impl MaskLayer {
    pub fn new(width: u32, height: u32, table: CodeTable) -> Self {
        Self::filled(width, height, table, 0)
    }

    pub fn filled(width: u32, height: u32, table: CodeTable, code: u8) -> Self {
        assert!(table.contains(code), "code {code} outside {table:?}");
        Self {
            width,
            height,
            table,
            codes: vec![code; width as usize * height as usize],
        }
    }

    /// Builds a layer from row-major codes, validating each one against the
    /// table.
    pub fn from_codes(width: u32, height: u32, table: CodeTable, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "{} codes for a {width}x{height} layer",
                codes.len()
            )));
        }
        if let Some(&bad) = codes.iter().find(|&&c| !table.contains(c)) {
            return Err(Error::InvalidCode {
                code: bad,
                table: table.name(),
                context: "from_codes".into(),
            });
        }
        Ok(Self {
            width,
            height,
            table,
            codes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn table(&self) -> CodeTable {
        self.table
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.codes[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, code: u8) {
        debug_assert!(self.table.contains(code));
        self.codes[y as usize * self.width as usize + x as usize] = code;
    }

    pub fn count_code(&self, code: u8) -> u64 {
        self.codes.iter().filter(|&&c| c == code).count() as u64
    }

    pub fn count_nonzero(&self) -> u64 {
        self.codes.iter().filter(|&&c| c != 0).count() as u64
    }

    /// Per-code pixel histogram, indexed by code.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.table.num_classes()];
        for &c in &self.codes {
            h[c as usize] += 1;
        }
        h
    }

    pub fn crop(&self, rect: PixelRect) -> MaskLayer {
        assert!(rect.within(self.width, self.height), "crop outside layer");
        let mut codes = Vec::with_capacity(rect.area() as usize);
        for y in rect.y..rect.bottom() {
            let row = y as usize * self.width as usize;
            codes.extend_from_slice(&self.codes[row + rect.x as usize..row + rect.right() as usize]);
        }
        MaskLayer {
            width: rect.width,
            height: rect.height,
            table: self.table,
            codes,
        }
    }

    /// Binary layer with 1 wherever this layer equals `code`.
    pub fn select(&self, code: u8) -> MaskLayer {
        MaskLayer {
            width: self.width,
            height: self.height,
            table: CodeTable::Binary,
            codes: self.codes.iter().map(|&c| u8::from(c == code)).collect(),
        }
    }

    pub fn ensure_dims(&self, expected: (u32, u32), context: &str) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                context: context.to_string(),
                expected,
                found: self.dims(),
            });
        }
        Ok(())
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.codes.clone())
            .expect("buffer length matches dimensions")
    }

    pub fn from_gray_image(img: GrayImage, table: CodeTable) -> Result<Self> {
        let (w, h) = img.dimensions();
        Self::from_codes(w, h, table, img.into_raw())
    }

    /// Reads an 8-bit single-channel PNG, rejecting any other pixel layout
    /// and any code outside `table`.
    pub fn load_png(path: &Path, table: CodeTable) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::image(path, e))?;
        let gray = match img {
            image::DynamicImage::ImageLuma8(g) => g,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "{}: expected 8-bit single-channel PNG, found {:?}",
                    path.display(),
                    other.color()
                )))
            }
        };
        Self::from_gray_image(gray, table).map_err(|e| match e {
            Error::InvalidCode { code, table, .. } => Error::InvalidCode {
                code,
                table,
                context: path.display().to_string(),
            },
            other => other,
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        crate::io::ensure_parent(path)?;
        self.to_gray_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::image(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_table_codes() {
        let err = MaskLayer::from_codes(2, 1, CodeTable::Binary, vec![0, 2]).unwrap_err();
        assert!(matches!(err, Error::InvalidCode { code: 2, .. }));
        assert!(MaskLayer::from_codes(2, 1, CodeTable::Components, vec![0, 7]).is_ok());
    }

    #[test]
    fn crop_and_histogram() {
        let mut m = MaskLayer::new(4, 3, CodeTable::Components);
        m.set(1, 1, 3);
        m.set(2, 1, 3);
        m.set(3, 2, 1);
        let c = m.crop(PixelRect::new(1, 1, 2, 2));
        assert_eq!(c.codes(), &[3, 3, 0, 0]);
        let h = m.histogram();
        assert_eq!(h[0], 9);
        assert_eq!(h[3], 2);
        assert_eq!(h[1], 1);
    }

    #[test]
    fn expand_clamps_to_image() {
        let r = PixelRect::new(1, 2, 3, 3).expand_clamped(2, 2, 5, 6);
        assert_eq!(r, PixelRect::new(0, 0, 5, 6));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = MaskLayer::from_codes(3, 2, CodeTable::Damage, vec![0, 1, 2, 3, 2, 1]).unwrap();
        m.save_png(&path).unwrap();
        assert_eq!(MaskLayer::load_png(&path, CodeTable::Damage).unwrap(), m);
        assert!(MaskLayer::load_png(&path, CodeTable::Binary).is_err());
    }
}
