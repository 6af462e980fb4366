//! Dataset preparation: split, audits, foreground masks, defect crops,
//! surface patches, class balancing and the synthetic fixture.

mod audit;
mod balance;
mod crops;
mod fixture;
mod foreground;
mod patches;
mod split;

use std::path::Path;

pub use audit::{
    audit_collisions, class_pixel_stats, image_collisions, pixel_stats_of, ClassPixelStats, CollisionReport, PairCount,
    PixelStats,
};
pub use balance::{balance_by_undersampling, balanced_indices};
pub use crops::{extract_defect_crops, padded_bbox, DefectCrop, DEFAULT_PADDING, MIN_INSTANCE_PIXELS};
pub use fixture::{
    fixture_damage_rule, generate_fixture_dataset, render_fixture, FixtureImageTruth, FixtureSidecar, FixtureSpec,
    FixtureTotals, PlantedCollision, PlantedInstance,
};
pub use foreground::{build_foreground_masks, foreground_from_components};
pub use patches::{extract_surface_patches, SurfacePatch};
pub use split::{split_dataset, test_count, DEFAULT_TEST_FRACTION};

use crate::error::{Error, Result};
use crate::io;
use crate::manifest::{Layer, ManifestEntry};
use crate::mask::MaskLayer;

/// Loads a single mask layer of an entry; `None` when the entry has no
/// such layer.
pub fn load_layer(entry: &ManifestEntry, layer: Layer) -> Result<Option<MaskLayer>> {
    let (Some(path), Some(table)) = (entry.layer_path(layer), layer.table()) else {
        return Ok(None);
    };
    if !path.is_file() {
        return Err(Error::MissingLayer {
            id: entry.id.clone(),
            layer: layer.name().to_string(),
            path: path.clone(),
        });
    }
    MaskLayer::load_png(path, table).map(Some)
}

/// Writes `<out>/<defect>/<source>_<instance>.png` with a matching
/// `_label.png`, plus `<out>/index.csv`.
pub fn write_defect_crops(crops: &[DefectCrop], out: &Path) -> Result<()> {
    io::ensure_dir(out)?;
    let index = out.join("index.csv");
    let mut w = csv::Writer::from_path(&index)?;
    w.write_record(["source_id", "defect", "component", "instance_id", "x", "y", "width", "height", "rgb", "label"])?;
    for c in crops {
        let stem = format!("{}/{}_{:03}", c.defect.name(), c.source_id, c.instance_id);
        let rgb = format!("{stem}.png");
        let label = format!("{stem}_label.png");
        io::save_rgb(&c.rgb, &out.join(&rgb))?;
        c.label.save_png(&out.join(&label))?;
        w.write_record([
            c.source_id.clone(),
            c.defect.name().to_string(),
            c.component.name().to_string(),
            c.instance_id.to_string(),
            c.origin.x.to_string(),
            c.origin.y.to_string(),
            c.origin.width.to_string(),
            c.origin.height.to_string(),
            rgb,
            label,
        ])?;
    }
    w.flush().map_err(|e| Error::io(&index, e))
}

/// Writes `<out>/<state>/<source>_<instance>.png` plus `<out>/index.csv`.
pub fn write_surface_patches(patches: &[SurfacePatch], out: &Path) -> Result<()> {
    io::ensure_dir(out)?;
    let index = out.join("index.csv");
    let mut w = csv::Writer::from_path(&index)?;
    w.write_record(["source_id", "instance_id", "component", "state", "center_x", "center_y", "width", "height", "angle", "rgb"])?;
    for p in patches {
        let rgb = format!("{}/{}_{:03}.png", p.state.name(), p.source_id, p.instance_id);
        io::save_rgb(&p.rgb, &out.join(&rgb))?;
        w.write_record([
            p.source_id.clone(),
            p.instance_id.to_string(),
            p.component.name().to_string(),
            p.state.name().to_string(),
            p.rect.center.x.to_string(),
            p.rect.center.y.to_string(),
            p.rect.width.to_string(),
            p.rect.height.to_string(),
            p.rect.angle.to_string(),
            rgb,
        ])?;
    }
    w.flush().map_err(|e| Error::io(&index, e))
}
