use image::RgbImage;
use serde::Serialize;

use crate::classes::{ComponentClass, DefectClass};
use crate::error::Result;
use crate::geometry::component_instances;
use crate::manifest::{ImageRecord, Layer};
use crate::mask::{MaskLayer, PixelRect};

pub const DEFAULT_PADDING: f64 = 0.10;
pub const MIN_INSTANCE_PIXELS: usize = 16;

/// Axis-aligned crop around one component instance for one defect class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectCrop {
    pub source_id: String,
    pub defect: DefectClass,
    pub component: ComponentClass,
    pub instance_id: usize,
    pub origin: PixelRect,
    #[serde(skip)]
    pub rgb: RgbImage,
    #[serde(skip)]
    pub label: MaskLayer,
}

/// Instance bounding box grown by `padding` of its own width/height on each
/// side (rounded), clamped to the image.
pub fn padded_bbox(bbox: PixelRect, padding: f64, width: u32, height: u32) -> PixelRect {
    let pad_x = (f64::from(bbox.width) * padding).round() as u32;
    let pad_y = (f64::from(bbox.height) * padding).round() as u32;
    bbox.expand_clamped(pad_x, pad_y, width, height)
}

/// One crop per (instance, defect) whose padded box holds at least one
/// positive pixel of that defect. Absent defect layers yield no crops.
pub fn extract_defect_crops(record: &ImageRecord, padding: f64, min_pixels: usize) -> Result<Vec<DefectCrop>> {
    let components = record.require(Layer::Components)?;
    let (w, h) = record.dims();
    let mut crops = Vec::new();
    for inst in component_instances(components, min_pixels) {
        let rect = padded_bbox(inst.bbox, padding, w, h);
        for (defect, layer) in record.defect_masks.iter() {
            let label = layer.crop(rect);
            if label.count_nonzero() == 0 {
                continue;
            }
            crops.push(DefectCrop {
                source_id: record.id.clone(),
                defect,
                component: inst.class().expect("component table code"),
                instance_id: inst.id,
                origin: rect,
                rgb: image::imageops::crop_imm(&record.rgb, rect.x, rect.y, rect.width, rect.height).to_image(),
                label,
            });
        }
    }
    Ok(crops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::CodeTable;

    fn record() -> ImageRecord {
        let mut r = ImageRecord::new("r", RgbImage::new(40, 20));
        let mut c = MaskLayer::new(40, 20, CodeTable::Components);
        for y in 2..12 {
            for x in 2..12 {
                c.set(x, y, 1);
            }
            for x in 20..30 {
                c.set(x, y, 3);
            }
        }
        let mut crack = MaskLayer::new(40, 20, CodeTable::Binary);
        crack.set(5, 5, 1);
        r.set_layer(Layer::Components, Some(c)).unwrap();
        r.set_layer(Layer::Defect(DefectClass::Cracking), Some(crack)).unwrap();
        r.set_layer(Layer::Defect(DefectClass::Spalling), Some(MaskLayer::new(40, 20, CodeTable::Binary))).unwrap();
        r
    }

    #[test]
    fn only_defective_instances_yield_crops() {
        let crops = extract_defect_crops(&record(), 0.1, 16).unwrap();
        assert_eq!(crops.len(), 1);
        let c = &crops[0];
        assert_eq!(c.defect, DefectClass::Cracking);
        assert_eq!(c.component, ComponentClass::Wall);
        assert_eq!(c.origin, PixelRect::new(1, 1, 12, 12));
        assert_eq!(c.label.count_nonzero(), 1);
        assert_eq!(c.rgb.dimensions(), (12, 12));
    }

    #[test]
    fn padding_clamps_to_image() {
        let r = padded_bbox(PixelRect::new(0, 0, 10, 10), 0.5, 12, 12);
        assert_eq!(r, PixelRect::new(0, 0, 12, 12));
        assert!(r.within(12, 12));
    }
}
