use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::classes::DamageState;
use crate::error::{Error, Result};
use crate::mask::MaskLayer;
use crate::models::node::{DamageQuery, ModelNode, NodeKind, SegmentQuery, Stage};
use crate::models::oracle::{answer_region, majority_state};

/// Serves precomputed masks laid out as `<dir>/<stage>/<image_id>.png`.
///
/// A damage-stage node reads a per-pixel damage mask and answers with the
/// majority state over the queried instance.
#[derive(Debug)]
pub struct ExternalMaskNode {
    stage: Stage,
    dir: PathBuf,
    last: Mutex<Option<(String, Arc<MaskLayer>)>>,
}

impl ExternalMaskNode {
    pub fn new(stage: Stage, dir: impl Into<PathBuf>) -> Self {
        Self {
            stage,
            dir: dir.into(),
            last: Mutex::new(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn mask_path(&self, image_id: &str) -> PathBuf {
        self.dir.join(self.stage.name()).join(format!("{image_id}.png"))
    }

    fn mask_for(&self, image_id: &str) -> Result<Arc<MaskLayer>> {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((id, m)) = last.as_ref() {
            if id == image_id {
                return Ok(m.clone());
            }
        }
        let path = self.mask_path(image_id);
        if !path.is_file() {
            return Err(Error::MissingLayer {
                id: image_id.to_string(),
                layer: self.stage.name().to_string(),
                path,
            });
        }
        let mask = Arc::new(MaskLayer::load_png(&path, self.stage.table())?);
        *last = Some((image_id.to_string(), mask.clone()));
        Ok(mask)
    }
}

impl ModelNode for ExternalMaskNode {
    fn stage(&self) -> Stage {
        self.stage
    }

    fn kind(&self) -> NodeKind {
        NodeKind::ExternalMasks
    }

    fn segment(&self, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
        if !self.stage.is_segmentation() {
            return Err(Error::WrongStage {
                bound: self.stage,
                operation: "segment an image",
            });
        }
        let mask = self.mask_for(query.image_id)?;
        answer_region(self.stage, &mask, query)
    }

    fn assess(&self, query: &DamageQuery<'_>) -> Result<DamageState> {
        if self.stage != Stage::Damage {
            return Err(Error::WrongStage {
                bound: self.stage,
                operation: "assess a damage state",
            });
        }
        let mask = self.mask_for(query.image_id)?;
        majority_state(&mask, query.instance)
    }
}
