use image::RgbImage;
use serde::Serialize;

use crate::classes::{ComponentClass, DamageState};
use crate::error::Result;
use crate::geometry::{component_instances, warp_to_square, RotatedRect};
use crate::manifest::{ImageRecord, Layer};

/// One component instance warped to a square, with its damage state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfacePatch {
    pub source_id: String,
    pub instance_id: usize,
    pub component: ComponentClass,
    pub rect: RotatedRect,
    pub state: DamageState,
    #[serde(skip)]
    pub rgb: RgbImage,
}

/// Warps every instance of at least `min_pixels` pixels through its
/// minimum-area rectangle; the state is the pixel majority of the damage
/// layer over the instance.
pub fn extract_surface_patches(record: &ImageRecord, min_pixels: usize, side: u32) -> Result<Vec<SurfacePatch>> {
    let components = record.require(Layer::Components)?;
    let damage = record.require(Layer::Damage)?;
    component_instances(components, min_pixels)
        .into_iter()
        .map(|inst| {
            let rect = inst.min_area_rect();
            let h = inst.histogram(damage);
            let state = DamageState::majority(&[h[0], h[1], h[2], h[3]]).expect("instances are never empty");
            Ok(SurfacePatch {
                source_id: record.id.clone(),
                instance_id: inst.id,
                component: inst.class().expect("component table code"),
                rgb: warp_to_square(&record.rgb, &rect, side)?,
                rect,
                state,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::CodeTable;
    use crate::geometry::PATCH_SIDE;
    use crate::mask::MaskLayer;

    fn record(fill: impl Fn(u32, u32) -> u8) -> ImageRecord {
        let mut r = ImageRecord::new("p", RgbImage::new(32, 32));
        let mut c = MaskLayer::new(32, 32, CodeTable::Components);
        let mut d = MaskLayer::new(32, 32, CodeTable::Damage);
        for y in 4..9 {
            for x in 3..23 {
                c.set(x, y, 2);
                d.set(x, y, fill(x, y));
            }
        }
        r.set_layer(Layer::Components, Some(c)).unwrap();
        r.set_layer(Layer::Damage, Some(d)).unwrap();
        r
    }

    #[test]
    fn uniform_axis_aligned() {
        let p = extract_surface_patches(&record(|_, _| 2), 16, PATCH_SIDE).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].state, DamageState::Moderate);
        assert_eq!(p[0].rect.angle, 0.0);
        assert_eq!((p[0].rect.width, p[0].rect.height), (20.0, 5.0));
        assert_eq!(p[0].rgb.dimensions(), (224, 224));
        assert_eq!(p[0].component, ComponentClass::Beam);
    }

    #[test]
    fn sixty_forty_goes_to_majority() {
        // 12 of 20 columns carry code 1, 8 carry code 2.
        let p = extract_surface_patches(&record(|x, _| if x < 15 { 1 } else { 2 }), 16, 64).unwrap();
        assert_eq!(p[0].state, DamageState::Light);
        assert_eq!(p[0].rgb.dimensions(), (64, 64));
    }

    #[test]
    fn small_instances_skipped() {
        assert!(extract_surface_patches(&record(|_, _| 1), 101, 64).unwrap().is_empty());
    }
}
