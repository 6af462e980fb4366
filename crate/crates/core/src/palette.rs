//! Import of colour-coded label images through a mapping file.
//!
//! ```json
//! {"table":"components","colors":[{"rgb":[0,0,0],"code":0},{"rgb":[255,0,0],"code":1}],"unmapped":null}
//! ```

use std::collections::HashMap;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::classes::CodeTable;
use crate::error::{Error, Result};
use crate::io;
use crate::mask::MaskLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorEntry {
    pub rgb: [u8; 3],
    pub code: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorMapping {
    pub table: CodeTable,
    pub colors: Vec<ColorEntry>,
    /// Code for colours missing from `colors`; `None` rejects them.
    #[serde(default)]
    pub unmapped: Option<u8>,
}

impl ColorMapping {
    pub fn load(path: &Path) -> Result<Self> {
        let m: ColorMapping = io::read_json(path)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for e in &self.colors {
            if !self.table.contains(e.code) {
                return Err(Error::InvalidCode {
                    code: e.code,
                    table: self.table.name(),
                    context: format!("colour {:?}", e.rgb),
                });
            }
            if seen.insert(e.rgb, e.code).is_some_and(|c| c != e.code) {
                return Err(Error::InvalidArgument(format!("colour {:?} mapped twice", e.rgb)));
            }
        }
        if let Some(code) = self.unmapped.filter(|&c| !self.table.contains(c)) {
            return Err(Error::InvalidCode {
                code,
                table: self.table.name(),
                context: "unmapped colours".into(),
            });
        }
        Ok(())
    }

    /// Converts a colour label image to a mask of the mapping's table.
    pub fn apply(&self, label: &RgbImage) -> Result<MaskLayer> {
        let lut: HashMap<[u8; 3], u8> = self.colors.iter().map(|e| (e.rgb, e.code)).collect();
        let codes = label
            .pixels()
            .map(|p| {
                lut.get(&p.0)
                    .copied()
                    .or(self.unmapped)
                    .ok_or_else(|| Error::InvalidArgument(format!("colour {:?} has no mapping", p.0)))
            })
            .collect::<Result<Vec<u8>>>()?;
        MaskLayer::from_codes(label.width(), label.height(), self.table, codes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    fn mapping(unmapped: Option<u8>) -> ColorMapping {
        ColorMapping {
            table: CodeTable::Damage,
            colors: vec![
                ColorEntry { rgb: [0, 0, 0], code: 0 },
                ColorEntry { rgb: [255, 0, 0], code: 3 },
            ],
            unmapped,
        }
    }

    #[test]
    fn maps_colours() {
        let mut img = RgbImage::new(2, 1);
        img.put_pixel(1, 0, Rgb([255, 0, 0]));
        let m = mapping(None).apply(&img).unwrap();
        assert_eq!(m.codes(), &[0, 3]);
        img.put_pixel(0, 0, Rgb([1, 2, 3]));
        assert!(mapping(None).apply(&img).is_err());
        assert_eq!(mapping(Some(1)).apply(&img).unwrap().codes(), &[1, 3]);
    }

    #[test]
    fn rejects_codes_outside_table() {
        let mut m = mapping(None);
        m.colors.push(ColorEntry { rgb: [9, 9, 9], code: 4 });
        assert!(m.validate().is_err());
        assert!(mapping(Some(7)).validate().is_err());
    }
}
