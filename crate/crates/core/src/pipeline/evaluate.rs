use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::manifest::{ImageRecord, Layer, Manifest};
use crate::metrics::{classification_metrics, MetricsReport, PixelConfusion, SegmentationReport};
use crate::models::{LabelStore, Stage};
use crate::pipeline::config::PipelineConfig;
use crate::pipeline::run::{run_pipeline, BatchFailure, StructureReport};

/// Per-stage scores over a manifest, keyed by stage name.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationSummary {
    pub images: usize,
    pub evaluated: usize,
    pub stages: BTreeMap<String, MetricsReport>,
    pub failures: Vec<BatchFailure>,
}

impl EvaluationSummary {
    pub fn stage(&self, stage: Stage) -> Option<&MetricsReport> {
        self.stages.get(stage.name())
    }
}

struct ImageTally {
    seg: Vec<(Stage, PixelConfusion)>,
    preds: Vec<DamageState>,
    gts: Vec<DamageState>,
}

fn tally(record: &ImageRecord, report: &StructureReport) -> Result<ImageTally> {
    let labels = LabelStore::from_records([record.clone()]);
    let mut seg = Vec::new();
    for stage in Stage::ALL.into_iter().filter(|s| s.is_segmentation()) {
        let gt = labels.layer(&record.id, stage.layer())?;
        let pred = match stage {
            Stage::Foreground => &report.foreground,
            Stage::Components => &report.components,
            Stage::Defect(d) => report.defects.get(d).expect("pipeline fills every defect layer"),
            Stage::Damage => unreachable!(),
        };
        let mut conf = PixelConfusion::new(stage.table());
        conf.accumulate(pred, &gt)?;
        seg.push((stage, conf));
    }
    let damage = record.require(Layer::Damage)?;
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for inst in &report.instances {
        let h = inst.instance.histogram(damage);
        gts.push(DamageState::majority(&[h[0], h[1], h[2], h[3]]).expect("instances are never empty"));
        preds.push(inst.state);
    }
    Ok(ImageTally { seg, preds, gts })
}

/// Runs the pipeline over every entry and scores each stage against the
/// entry's ground truth: binary foreground, each defect layer and the
/// component classes over full images, and damage states over the
/// predicted instances (truth = pixel majority of the labelled damage
/// layer over each instance).
///
/// Images whose pipeline run fails are listed in `failures` and left out
/// of every tally. A missing ground-truth layer is an error.
pub fn evaluate_pipeline(cfg: &PipelineConfig, manifest: &Manifest) -> Result<EvaluationSummary> {
    let per_image: Vec<Result<std::result::Result<ImageTally, BatchFailure>>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let record = ImageRecord::load(e)?;
            match run_pipeline(cfg, &record) {
                Ok(report) => tally(&record, &report).map(Ok),
                Err(err) => Ok(Err(BatchFailure::new(&e.id, &err))),
            }
        })
        .collect();

    let mut seg: BTreeMap<Stage, PixelConfusion> = BTreeMap::new();
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    let mut failures = Vec::new();
    let mut evaluated = 0;
    for item in per_image {
        match item? {
            Ok(t) => {
                evaluated += 1;
                for (stage, conf) in t.seg {
                    seg.entry(stage)
                        .or_insert_with(|| PixelConfusion::new(stage.table()))
                        .merge(&conf)?;
                }
                preds.extend(t.preds);
                gts.extend(t.gts);
            }
            Err(f) => failures.push(f),
        }
    }
    let mut stages: BTreeMap<String, MetricsReport> = seg
        .into_iter()
        .map(|(s, c)| (s.to_string(), MetricsReport::Segmentation(SegmentationReport::from_confusion(c))))
        .collect();
    match classification_metrics(&preds, &gts) {
        Ok(r) => {
            stages.insert(Stage::Damage.to_string(), MetricsReport::Classification(r));
        }
        Err(Error::Empty(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(EvaluationSummary {
        images: manifest.len(),
        evaluated,
        stages,
        failures,
    })
}
