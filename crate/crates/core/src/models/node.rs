//! The swappable model-node contract.
//!
//! Every stage of the pipeline is a slot holding some [`ModelNode`]. A node
//! declares the stage it serves; segmentation nodes turn a raster region
//! into a mask of that stage's code table and damage nodes turn one
//! component instance into a [`DamageState`].

use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use serde::{Serialize, Serializer};

use crate::classes::{CodeTable, DamageState, DefectClass};
use crate::error::{Error, Result};
use crate::geometry::ComponentInstance;
use crate::manifest::Layer;
use crate::mask::{MaskLayer, PixelRect};
use crate::models::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    /// Task 0: foreground/background separation.
    Foreground,
    /// Task 2: component segmentation.
    Components,
    /// Task 1: one binary segmentation per defect class.
    Defect(DefectClass),
    /// Task 3: damage-state assessment of one component.
    Damage,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Foreground,
        Stage::Components,
        Stage::Defect(DefectClass::Cracking),
        Stage::Defect(DefectClass::Spalling),
        Stage::Defect(DefectClass::ExposedRebar),
        Stage::Damage,
    ];

    /// Directory / key name: `foreground`, `components`, `cracking`,
    /// `spalling`, `rebar`, `damage`.
    pub fn name(self) -> &'static str {
        match self {
            Stage::Foreground => "foreground",
            Stage::Components => "components",
            Stage::Defect(d) => d.name(),
            Stage::Damage => "damage",
        }
    }

    /// Label layer holding this stage's ground truth.
    pub fn layer(self) -> Layer {
        match self {
            Stage::Foreground => Layer::Foreground,
            Stage::Components => Layer::Components,
            Stage::Defect(d) => Layer::Defect(d),
            Stage::Damage => Layer::Damage,
        }
    }

    /// Code table of the masks a node of this stage produces or reads.
    pub fn table(self) -> CodeTable {
        match self {
            Stage::Foreground | Stage::Defect(_) => CodeTable::Binary,
            Stage::Components => CodeTable::Components,
            Stage::Damage => CodeTable::Damage,
        }
    }

    pub fn is_segmentation(self) -> bool {
        self != Stage::Damage
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

impl Serialize for Stage {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Oracle,
    ExternalMasks,
    Classifier,
    Constant,
}

/// Input of a segmentation node: a region of an image.
#[derive(Debug, Clone, Copy)]
pub struct SegmentQuery<'a> {
    pub image_id: &'a str,
    /// Raster content of `region` only.
    pub image: &'a RgbImage,
    /// Location of `image` in full-image coordinates.
    pub region: PixelRect,
    /// Size of the full image.
    pub image_dims: (u32, u32),
}

impl<'a> SegmentQuery<'a> {
    pub fn full(image_id: &'a str, image: &'a RgbImage) -> Self {
        Self {
            image_id,
            image,
            region: PixelRect::full(image.width(), image.height()),
            image_dims: image.dimensions(),
        }
    }
}

/// Input of a damage-state node: one component instance.
#[derive(Debug, Clone, Copy)]
pub struct DamageQuery<'a> {
    pub image_id: &'a str,
    pub instance: &'a ComponentInstance,
    /// The instance's surface warped to a square patch.
    pub patch: &'a RgbImage,
    pub features: &'a FeatureVector,
}

pub trait ModelNode: Send + Sync {
    fn stage(&self) -> Stage;

    fn kind(&self) -> NodeKind;

    /// Mask of `query.region`, in this stage's code table.
    fn segment(&self, query: &SegmentQuery<'_>) -> Result<MaskLayer> {
        let _ = query;
        Err(Error::WrongStage {
            bound: self.stage(),
            operation: "segment an image",
        })
    }

    fn assess(&self, query: &DamageQuery<'_>) -> Result<DamageState> {
        let _ = query;
        Err(Error::WrongStage {
            bound: self.stage(),
            operation: "assess a damage state",
        })
    }
}

/// Checks a segmentation output against the query and the stage table.
pub fn validate_segment_output(stage: Stage, query: &SegmentQuery<'_>, mask: &MaskLayer) -> Result<()> {
    if mask.table() != stage.table() {
        return Err(Error::InvalidArgument(format!(
            "{stage} node returned a {} mask",
            mask.table().name()
        )));
    }
    mask.ensure_dims((query.region.width, query.region.height), &format!("{stage} output"))
}
