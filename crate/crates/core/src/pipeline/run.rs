use std::path::Path;

use image::RgbImage;
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{CodeTable, ComponentClass, DamageState, DefectClass};
use crate::dataset::padded_bbox;
use crate::error::{Error, Result};
use crate::geometry::{apply_foreground_mask, component_instances, warp_to_square, ComponentInstance, RotatedRect};
use crate::io;
use crate::manifest::{DefectMasks, ImageRecord, Manifest};
use crate::mask::{MaskLayer, PixelRect};
use crate::models::{build_feature_vector, validate_segment_output, DamageQuery, FeatureVector, SegmentQuery, Stage};
use crate::pipeline::config::PipelineConfig;
use crate::pipeline::overlay::render_overlay;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceReport {
    pub id: usize,
    pub class: ComponentClass,
    pub pixels: u64,
    pub bbox: PixelRect,
    pub rect: RotatedRect,
    pub features: FeatureVector,
    pub state: DamageState,
    #[serde(skip)]
    pub instance: ComponentInstance,
}

/// Everything the pipeline produced for one image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<InstanceReport>,
    #[serde(skip)]
    pub foreground: MaskLayer,
    /// Predicted component mask with instances below the size threshold
    /// cleared.
    #[serde(skip)]
    pub components: MaskLayer,
    #[serde(skip)]
    pub defects: DefectMasks,
    #[serde(skip)]
    pub overlay: RgbImage,
}

impl StructureReport {
    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }
}

fn segment(cfg: &PipelineConfig, stage: Stage, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
    let mask = cfg.node(stage).segment(query)?;
    validate_segment_output(stage, query, &mask)?;
    Ok(mask)
}

/// Runs the staged workflow on one image:
///
/// 1. foreground node on the raw image, background filled;
/// 2. component node on the masked image, restricted to the foreground,
///    split into 8-connected instances;
/// 3. each defect node on every instance's padded crop, crops OR-ed into
///    full-image masks;
/// 4. descriptors from the assembled masks, and the damage node on every
///    instance's warped patch;
/// 5. overlay.
///
/// A failing node aborts the image with an error tagged by its stage.
pub fn run_pipeline(cfg: &PipelineConfig, record: &ImageRecord) -> Result<StructureReport> {
    let p = &cfg.params;
    let id = record.id.as_str();
    let (w, h) = record.dims();

    let fg = segment(cfg, Stage::Foreground, &SegmentQuery::full(id, &record.rgb))
        .map_err(|e| e.at_stage(Stage::Foreground, id))?;
    let masked = apply_foreground_mask(&record.rgb, &fg, p.fill).map_err(|e| e.at_stage(Stage::Foreground, id))?;

    let mut components = segment(cfg, Stage::Components, &SegmentQuery::full(id, &masked))
        .map_err(|e| e.at_stage(Stage::Components, id))?;
    for (i, c) in components.codes().to_vec().into_iter().enumerate() {
        if c != 0 && fg.codes()[i] == 0 {
            components.set(i as u32 % w, i as u32 / w, 0);
        }
    }
    let instances = component_instances(&components, p.min_instance_pixels);
    let kept: usize = instances.iter().map(ComponentInstance::len).sum();
    if kept as u64 != components.count_nonzero() {
        let mut cleaned = MaskLayer::new(w, h, CodeTable::Components);
        for inst in &instances {
            for &(x, y) in &inst.pixels {
                cleaned.set(x, y, inst.code);
            }
        }
        components = cleaned;
    }

    let mut defects = DefectMasks::default();
    for d in DefectClass::ALL {
        let stage = Stage::Defect(d);
        let mut full = MaskLayer::new(w, h, CodeTable::Binary);
        for inst in &instances {
            let region = padded_bbox(inst.bbox, p.padding_fraction, w, h);
            let crop = image::imageops::crop_imm(&masked, region.x, region.y, region.width, region.height).to_image();
            let query = SegmentQuery {
                image_id: id,
                image: &crop,
                region,
                image_dims: (w, h),
            };
            let part = segment(cfg, stage, &query).map_err(|e| e.at_stage(stage, id))?;
            for yy in 0..region.height {
                for xx in 0..region.width {
                    if part.get(xx, yy) != 0 {
                        full.set(region.x + xx, region.y + yy, 1);
                    }
                }
            }
        }
        defects.set(d, Some(full));
    }

    let area = record.area();
    let damage = cfg.node(Stage::Damage);
    let mut reports = Vec::with_capacity(instances.len());
    for inst in instances {
        let features = build_feature_vector(&inst, area, &defects);
        let rect = inst.min_area_rect();
        let patch = warp_to_square(&masked, &rect, p.patch_side).map_err(|e| e.at_stage(Stage::Damage, id))?;
        let state = damage
            .assess(&DamageQuery {
                image_id: id,
                instance: &inst,
                patch: &patch,
                features: &features,
            })
            .map_err(|e| e.at_stage(Stage::Damage, id))?;
        reports.push(InstanceReport {
            id: inst.id,
            class: inst.class().expect("component table code"),
            pixels: inst.len() as u64,
            bbox: inst.bbox,
            rect,
            features,
            state,
            instance: inst,
        });
    }

    let mut report = StructureReport {
        image_id: record.id.clone(),
        width: w,
        height: h,
        instances: reports,
        foreground: fg,
        components,
        defects,
        overlay: RgbImage::new(0, 0),
    };
    report.overlay = render_overlay(&record.rgb, &report, p.overlay_alpha);
    Ok(report)
}

/// Outcome of one image in a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub image_id: String,
    pub result: Result<StructureReport>,
}

/// Runs every manifest entry independently; one failing image does not
/// stop the others. Results keep manifest order.
pub fn run_batch(cfg: &PipelineConfig, manifest: &Manifest) -> Vec<BatchItem> {
    manifest
        .entries
        .par_iter()
        .map(|e| BatchItem {
            image_id: e.id.clone(),
            result: ImageRecord::load(e).and_then(|r| run_pipeline(cfg, &r)),
        })
        .collect()
}

/// Writes `<out>/<id>/report.json`, `overlay.png` and the predicted masks.
pub fn write_report(report: &StructureReport, out: &Path) -> Result<()> {
    let dir = out.join(&report.image_id);
    io::ensure_dir(&dir)?;
    io::write_json(&dir.join("report.json"), report)?;
    io::save_rgb(&report.overlay, &dir.join("overlay.png"))?;
    report.foreground.save_png(&dir.join("foreground.png"))?;
    report.components.save_png(&dir.join("components.png"))?;
    for (d, m) in report.defects.iter() {
        m.save_png(&dir.join(format!("{}.png", d.name())))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchFailure {
    pub image_id: String,
    pub stage: Option<String>,
    pub message: String,
}

impl BatchFailure {
    pub fn new(image_id: &str, err: &Error) -> Self {
        let stage = match err {
            Error::Stage { stage, .. } => Some(stage.to_string()),
            _ => None,
        };
        Self {
            image_id: image_id.to_string(),
            stage,
            message: err.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    use crate::dataset::{render_fixture, FixtureSpec};
    use crate::models::{ConstantNode, LabelStore, ModelNode, NodeKind, OracleNode};
    use crate::pipeline::config::PipelineParams;

    fn fixture() -> Vec<ImageRecord> {
        render_fixture(&FixtureSpec { images: 3, ..FixtureSpec::default() }, 7)
            .unwrap()
            .into_iter()
            .map(|(r, _)| r)
            .collect()
    }

    fn oracle_cfg(records: &[ImageRecord]) -> PipelineConfig {
        PipelineConfig::oracle(Arc::new(LabelStore::from_records(records.to_vec())), PipelineParams::default()).unwrap()
    }

    #[test]
    fn oracle_reproduces_ground_truth() {
        let recs = fixture();
        let cfg = oracle_cfg(&recs);
        for rec in &recs {
            let rep = run_pipeline(&cfg, rec).unwrap();
            assert_eq!(&rep.components, rec.component_mask.as_ref().unwrap());
            assert_eq!(&rep.foreground, rec.foreground_mask.as_ref().unwrap());
            assert_eq!(rep.defects, rec.defect_masks);
            let gt = crate::models::labeled_features(rec, 16).unwrap();
            assert_eq!(rep.instances.len(), gt.len());
            for (i, (fv, s)) in rep.instances.iter().zip(gt) {
                assert_eq!(i.state, s);
                assert_eq!(i.features, fv);
            }
        }
    }

    #[test]
    fn empty_foreground_gives_empty_report() {
        let recs = fixture();
        let cfg = oracle_cfg(&recs).with_node(Arc::new(ConstantNode::new(Stage::Foreground, 0).unwrap()));
        let rep = run_pipeline(&cfg, &recs[0]).unwrap();
        assert_eq!(rep.instance_count(), 0);
        assert_eq!(rep.components.count_nonzero(), 0);
        assert_eq!(rep.overlay, recs[0].rgb);
    }

    struct Probe {
        seen: Mutex<Vec<RgbImage>>,
        inner: OracleNode,
    }

    impl ModelNode for Probe {
        fn stage(&self) -> Stage {
            Stage::Components
        }
        fn kind(&self) -> NodeKind {
            NodeKind::Oracle
        }
        fn segment(&self, q: &SegmentQuery<'_>) -> Result<MaskLayer> {
            self.seen.lock().unwrap().push(q.image.clone());
            self.inner.segment(q)
        }
    }

    #[test]
    fn components_see_the_masked_image() {
        let recs = fixture();
        let store = Arc::new(LabelStore::from_records(recs.clone()));
        let probe = Arc::new(Probe {
            seen: Mutex::new(Vec::new()),
            inner: OracleNode::new(Stage::Components, store),
        });
        let cfg = oracle_cfg(&recs).with_node(probe.clone());
        run_pipeline(&cfg, &recs[0]).unwrap();
        let seen = probe.seen.lock().unwrap();
        assert_eq!(seen.len(), 1);
        let fg = recs[0].foreground_mask.as_ref().unwrap();
        let expect = apply_foreground_mask(&recs[0].rgb, fg, [0, 0, 0]).unwrap();
        assert_eq!(seen[0], expect);
        assert_ne!(seen[0], recs[0].rgb);
    }

    #[test]
    fn failures_are_stage_tagged_and_deterministic() {
        let recs = fixture();
        let cfg = oracle_cfg(&recs[..1]);
        let err = run_pipeline(&cfg, &recs[1]).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: Stage::Foreground, .. }));
        let a = serde_json::to_string(&run_pipeline(&cfg, &recs[0]).unwrap()).unwrap();
        let b = serde_json::to_string(&run_pipeline(&cfg, &recs[0]).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_ratios_recompute_from_own_masks() {
        let recs = fixture();
        let cfg = oracle_cfg(&recs);
        let rep = run_pipeline(&cfg, &recs[2]).unwrap();
        let again = component_instances(&rep.components, 1);
        assert_eq!(again.len(), rep.instances.len());
        for (inst, r) in again.iter().zip(&rep.instances) {
            assert_eq!(build_feature_vector(inst, recs[2].area(), &rep.defects), r.features);
        }
    }
}
