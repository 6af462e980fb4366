use image::{Rgb, RgbImage};

use crate::classes::DamageState;
use crate::pipeline::run::StructureReport;

/// Tint per component code.
pub const CLASS_COLORS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [230, 159, 0],
    [86, 180, 233],
    [0, 158, 115],
    [240, 228, 66],
    [0, 114, 178],
    [213, 94, 0],
    [204, 121, 167],
];

/// Badge colour per damage state.
pub const STATE_COLORS: [[u8; 3]; 4] = [[40, 200, 40], [250, 220, 0], [250, 130, 0], [220, 20, 20]];

pub const DEFECT_OUTLINE: [u8; 3] = [255, 0, 255];

fn blend(px: &mut Rgb<u8>, color: [u8; 3], alpha: f64) {
    for (c, t) in px.0.iter_mut().zip(color) {
        *c = (f64::from(*c) * (1.0 - alpha) + f64::from(t) * alpha).round() as u8;
    }
}

/// Tints every instance with its class colour, marks a square state badge
/// in the top-left corner of its box and outlines defect pixels. Only
/// instance pixels change; badges and outlines use twice the tint alpha
/// (capped at 1).
pub fn render_overlay(rgb: &RgbImage, report: &StructureReport, alpha: f64) -> RgbImage {
    let mut out = rgb.clone();
    if alpha <= 0.0 {
        return out;
    }
    let strong = (alpha * 2.0).min(1.0);
    let (w, h) = rgb.dimensions();
    let defect_edge = |x: u32, y: u32| {
        report.defects.iter().any(|(_, m)| {
            m.get(x, y) != 0
                && [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
                    let (nx, ny) = (i64::from(x) + dx, i64::from(y) + dy);
                    nx < 0 || ny < 0 || nx >= i64::from(w) || ny >= i64::from(h) || m.get(nx as u32, ny as u32) == 0
                })
        })
    };
    for inst in &report.instances {
        let b = inst.bbox;
        let side = (b.width.min(b.height) / 4).clamp(1, 12);
        let state: DamageState = inst.state;
        for &(x, y) in &inst.instance.pixels {
            let px = out.get_pixel_mut(x, y);
            if x < b.x + side && y < b.y + side {
                blend(px, STATE_COLORS[state as usize], strong);
            } else if defect_edge(x, y) {
                blend(px, DEFECT_OUTLINE, strong);
            } else {
                blend(px, CLASS_COLORS[inst.class.code() as usize], alpha);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::classes::CodeTable;
    use crate::manifest::{ImageRecord, Layer};
    use crate::mask::MaskLayer;
    use crate::models::LabelStore;
    use crate::pipeline::{run_pipeline, PipelineConfig, PipelineParams};

    fn one_instance() -> ImageRecord {
        let rgb = RgbImage::from_fn(20, 12, |x, y| Rgb([(x * 9) as u8, (y * 13) as u8, 100]));
        let mut r = ImageRecord::new("o", rgb);
        let mut c = MaskLayer::new(20, 12, CodeTable::Components);
        for y in 2..9 {
            for x in 4..15 {
                c.set(x, y, 3);
            }
        }
        let mut crack = MaskLayer::new(20, 12, CodeTable::Binary);
        crack.set(9, 5, 1);
        r.set_layer(Layer::Components, Some(c)).unwrap();
        r.set_layer(Layer::Damage, Some(MaskLayer::filled(20, 12, CodeTable::Damage, 1))).unwrap();
        r.set_layer(Layer::Defect(crate::classes::DefectClass::Cracking), Some(crack)).unwrap();
        for d in [crate::classes::DefectClass::Spalling, crate::classes::DefectClass::ExposedRebar] {
            r.set_layer(Layer::Defect(d), Some(MaskLayer::new(20, 12, CodeTable::Binary))).unwrap();
        }
        r
    }

    fn report(alpha: f64) -> (ImageRecord, StructureReport) {
        let rec = one_instance();
        let params = PipelineParams {
            overlay_alpha: alpha,
            ..PipelineParams::default()
        };
        let cfg = PipelineConfig::oracle(Arc::new(LabelStore::from_records([rec.clone()])), params).unwrap();
        let rep = run_pipeline(&cfg, &rec).unwrap();
        (rec, rep)
    }

    #[test]
    fn only_instance_pixels_change() {
        let (rec, rep) = report(0.5);
        assert_eq!(rep.instances.len(), 1);
        let inst = &rep.instances[0].instance;
        for (x, y, px) in rep.overlay.enumerate_pixels() {
            let inside = inst.contains(x, y);
            assert_eq!(px != rec.rgb.get_pixel(x, y), inside, "pixel ({x},{y})");
        }
        assert_eq!(render_overlay(&rec.rgb, &rep, 0.5), rep.overlay);
    }

    #[test]
    fn zero_alpha_is_identity() {
        let (rec, rep) = report(0.0);
        assert_eq!(rep.overlay, rec.rgb);
    }
}
