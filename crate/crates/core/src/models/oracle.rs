use std::collections::HashMap;
use std::sync::Arc;

use crate::classes::{CodeTable, DamageState};
use crate::error::{Error, Result};
use crate::manifest::{ImageRecord, Layer, Manifest, ManifestEntry};
use crate::mask::MaskLayer;
use crate::models::node::{DamageQuery, ModelNode, NodeKind, SegmentQuery, Stage};

/// Ground-truth lookup by image id, either from records held in memory or
/// from manifest entries read on demand.
#[derive(Debug, Clone, Default)]
pub struct LabelStore {
    records: HashMap<String, Arc<ImageRecord>>,
    entries: HashMap<String, ManifestEntry>,
}

impl LabelStore {
    pub fn from_records(records: impl IntoIterator<Item = ImageRecord>) -> Self {
        Self {
            records: records.into_iter().map(|r| (r.id.clone(), Arc::new(r))).collect(),
            entries: HashMap::new(),
        }
    }

    pub fn from_manifest(manifest: &Manifest) -> Self {
        Self {
            records: HashMap::new(),
            entries: manifest.entries.iter().map(|e| (e.id.clone(), e.clone())).collect(),
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.records.contains_key(id) || self.entries.contains_key(id)
    }

    /// The stored layer of `id`. A missing foreground layer is derived as
    /// "component code non-zero".
    pub fn layer(&self, id: &str, layer: Layer) -> Result<MaskLayer> {
        let found = self.lookup(id, layer)?;
        match (found, layer) {
            (Some(m), _) => Ok(m),
            (None, Layer::Foreground) => match self.lookup(id, Layer::Components)? {
                Some(c) => Ok(binarize(&c)),
                None => Err(absent(id, layer)),
            },
            (None, _) => Err(absent(id, layer)),
        }
    }

    fn lookup(&self, id: &str, layer: Layer) -> Result<Option<MaskLayer>> {
        if let Some(r) = self.records.get(id) {
            return Ok(r.layer(layer).cloned());
        }
        let entry = self.entries.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        match (entry.layer_path(layer), layer.table()) {
            (Some(p), Some(table)) => {
                if !p.is_file() {
                    return Err(Error::MissingLayer {
                        id: id.to_string(),
                        layer: layer.name().to_string(),
                        path: p.clone(),
                    });
                }
                MaskLayer::load_png(p, table).map(Some)
            }
            _ => Ok(None),
        }
    }
}

fn absent(id: &str, layer: Layer) -> Error {
    Error::LayerAbsent {
        id: id.to_string(),
        layer: layer.name().to_string(),
    }
}

fn binarize(m: &MaskLayer) -> MaskLayer {
    let codes = m.codes().iter().map(|&c| u8::from(c != 0)).collect();
    MaskLayer::from_codes(m.width(), m.height(), CodeTable::Binary, codes).expect("binary codes")
}

/// Pixel-majority damage state of an instance; ties go to the more severe
/// state.
pub(crate) fn majority_state(damage: &MaskLayer, instance: &crate::geometry::ComponentInstance) -> Result<DamageState> {
    let h = instance.histogram(damage);
    DamageState::majority(&[h[0], h[1], h[2], h[3]]).ok_or(Error::Empty("component instance"))
}

/// Crops a full-image layer to the query region after checking it belongs
/// to an image of the query's size.
pub(crate) fn answer_region(stage: Stage, mask: &MaskLayer, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
    mask.ensure_dims(query.image_dims, &format!("{}/{}", query.image_id, stage))?;
    if !query.region.within(mask.width(), mask.height()) {
        return Err(Error::InvalidArgument(format!(
            "region {:?} outside {}x{} image `{}`",
            query.region,
            mask.width(),
            mask.height(),
            query.image_id
        )));
    }
    Ok(mask.crop(query.region))
}

/// Answers every query with the stored ground truth.
#[derive(Debug, Clone)]
pub struct OracleNode {
    stage: Stage,
    labels: Arc<LabelStore>,
}

impl OracleNode {
    pub fn new(stage: Stage, labels: Arc<LabelStore>) -> Self {
        Self { stage, labels }
    }
}

impl ModelNode for OracleNode {
    fn stage(&self) -> Stage {
        self.stage
    }

    fn kind(&self) -> NodeKind {
        NodeKind::Oracle
    }

    fn segment(&self, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
        if !self.stage.is_segmentation() {
            return Err(Error::WrongStage {
                bound: self.stage,
                operation: "segment an image",
            });
        }
        let mask = self.labels.layer(query.image_id, self.stage.layer())?;
        answer_region(self.stage, &mask, query)
    }

    fn assess(&self, query: &DamageQuery<'_>) -> Result<DamageState> {
        if self.stage != Stage::Damage {
            return Err(Error::WrongStage {
                bound: self.stage,
                operation: "assess a damage state",
            });
        }
        let damage = self.labels.layer(query.image_id, Layer::Damage)?;
        majority_state(&damage, query.instance)
    }
}

/// Segmentation node that answers every region with one code. Useful as a
/// trivial baseline.
#[derive(Debug, Clone, Copy)]
pub struct ConstantNode {
    stage: Stage,
    code: u8,
}

impl ConstantNode {
    pub fn new(stage: Stage, code: u8) -> Result<Self> {
        if !stage.is_segmentation() {
            return Err(Error::InvalidArgument(format!("{stage} is not a segmentation stage")));
        }
        if !stage.table().contains(code) {
            return Err(Error::InvalidCode {
                code,
                table: stage.table().name(),
                context: format!("constant {stage} node"),
            });
        }
        Ok(Self { stage, code })
    }
}

impl ModelNode for ConstantNode {
    fn stage(&self) -> Stage {
        self.stage
    }

    fn kind(&self) -> NodeKind {
        NodeKind::Constant
    }

    fn segment(&self, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
        Ok(MaskLayer::filled(query.region.width, query.region.height, self.stage.table(), self.code))
    }
}
