use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{DEFAULT_PADDING, MIN_INSTANCE_PIXELS};
use crate::error::{Error, Result};
use crate::geometry::PATCH_SIDE;
use crate::models::{LabelStore, ModelNode, OracleNode, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    /// Padding of defect crops, as a fraction of the instance box per side.
    pub padding_fraction: f64,
    pub patch_side: u32,
    /// Instances smaller than this are dropped from the component mask.
    pub min_instance_pixels: usize,
    /// Colour written over background pixels.
    pub fill: [u8; 3],
    pub overlay_alpha: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            padding_fraction: DEFAULT_PADDING,
            patch_side: PATCH_SIDE,
            min_instance_pixels: MIN_INSTANCE_PIXELS,
            fill: [0, 0, 0],
            overlay_alpha: 0.45,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.padding_fraction) {
            return Err(Error::InvalidArgument("padding fraction must lie in [0, 1]".into()));
        }
        if self.patch_side == 0 || self.patch_side > 4096 {
            return Err(Error::InvalidArgument("patch side must lie in 1..=4096".into()));
        }
        if self.min_instance_pixels == 0 {
            return Err(Error::InvalidArgument("minimum instance size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.overlay_alpha) {
            return Err(Error::InvalidArgument("overlay alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One bound node per stage plus run parameters.
#[derive(Clone)]
pub struct PipelineConfig {
    nodes: BTreeMap<Stage, Arc<dyn ModelNode>>,
    pub params: PipelineParams,
}

impl fmt::Debug for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kinds: BTreeMap<String, String> = self
            .nodes
            .iter()
            .map(|(s, n)| (s.to_string(), format!("{:?}", n.kind())))
            .collect();
        f.debug_struct("PipelineConfig")
            .field("nodes", &kinds)
            .field("params", &self.params)
            .finish()
    }
}

impl PipelineConfig {
    /// Requires exactly one node for each of the six stages, each declaring
    /// the stage it is bound to.
    pub fn new(nodes: impl IntoIterator<Item = Arc<dyn ModelNode>>, params: PipelineParams) -> Result<Self> {
        params.validate()?;
        let mut map = BTreeMap::new();
        for n in nodes {
            let stage = n.stage();
            if map.insert(stage, n).is_some() {
                return Err(Error::InvalidArgument(format!("stage {stage} bound twice")));
            }
        }
        if let Some(missing) = Stage::ALL.iter().find(|s| !map.contains_key(s)) {
            return Err(Error::InvalidArgument(format!("stage {missing} is not bound")));
        }
        Ok(Self { nodes: map, params })
    }

    /// Every stage answered by the ground truth in `labels`.
    pub fn oracle(labels: Arc<LabelStore>, params: PipelineParams) -> Result<Self> {
        Self::new(
            Stage::ALL.map(|s| Arc::new(OracleNode::new(s, labels.clone())) as Arc<dyn ModelNode>),
            params,
        )
    }

    pub fn node(&self, stage: Stage) -> &Arc<dyn ModelNode> {
        &self.nodes[&stage]
    }

    /// Copy with the node of `node.stage()` replaced.
    pub fn with_node(&self, node: Arc<dyn ModelNode>) -> Self {
        let mut out = self.clone();
        out.nodes.insert(node.stage(), node);
        out
    }

    pub fn bindings(&self) -> impl Iterator<Item = (Stage, &Arc<dyn ModelNode>)> {
        self.nodes.iter().map(|(s, n)| (*s, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ConstantNode;

    #[test]
    fn every_slot_must_be_bound_once() {
        let store = Arc::new(LabelStore::default());
        let cfg = PipelineConfig::oracle(store.clone(), PipelineParams::default()).unwrap();
        assert_eq!(cfg.bindings().count(), 6);
        let five: Vec<Arc<dyn ModelNode>> = Stage::ALL[..5]
            .iter()
            .map(|&s| Arc::new(OracleNode::new(s, store.clone())) as Arc<dyn ModelNode>)
            .collect();
        assert!(PipelineConfig::new(five.clone(), PipelineParams::default()).is_err());
        let mut dup = five;
        dup.push(Arc::new(ConstantNode::new(Stage::Foreground, 1).unwrap()));
        assert!(PipelineConfig::new(dup, PipelineParams::default()).is_err());
    }

    #[test]
    fn params_checked() {
        let bad = PipelineParams {
            overlay_alpha: 1.5,
            ..PipelineParams::default()
        };
        assert!(bad.validate().is_err());
        PipelineParams::default().validate().unwrap();
    }
}
