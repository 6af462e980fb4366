//! Toolkit for post-earthquake inspection of building facades from aerial
//! imagery: label-layer IO, dataset preparation, a staged
//! segmentation-then-assessment pipeline with swappable model nodes,
//! shallow damage-state classifiers and exact evaluation metrics.

pub mod classes;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod io;
pub mod manifest;
pub mod mask;
pub mod metrics;
pub mod models;
pub mod palette;
pub mod pipeline;
pub mod rng;

pub use classes::{CodeTable, ComponentClass, DamageState, DefectClass};
pub use error::{Error, Result};
pub use manifest::{load_manifest, ImageRecord, Layer, Manifest, ManifestEntry, SplitTag};
pub use mask::{MaskLayer, PixelRect};
