//! Dataset audits: defect label collisions and per-class pixel statistics.

use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{CodeTable, DefectClass};
use crate::dataset::load_layer;
use crate::error::{Error, Result};
use crate::manifest::{Layer, Manifest};
use crate::mask::MaskLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCount {
    pub a: DefectClass,
    pub b: DefectClass,
    /// Images with at least one pixel positive in both layers.
    pub images: u64,
    /// Pixels positive in both layers, summed over images.
    pub pixels: u64,
}

/// Per-pair collision counts over unordered defect pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CollisionReport {
    pub images: u64,
    pub pairs: Vec<PairCount>,
}

impl CollisionReport {
    fn empty() -> Self {
        Self {
            images: 0,
            pairs: DefectClass::pairs()
                .into_iter()
                .map(|(a, b)| PairCount {
                    a,
                    b,
                    images: 0,
                    pixels: 0,
                })
                .collect(),
        }
    }

    fn pair(&self, a: DefectClass, b: DefectClass) -> Option<&PairCount> {
        self.pairs
            .iter()
            .find(|p| (p.a, p.b) == (a, b) || (p.a, p.b) == (b, a))
    }

    /// Images with a collision between `a` and `b`, in either order.
    /// `None` when `a == b`.
    pub fn get(&self, a: DefectClass, b: DefectClass) -> Option<u64> {
        self.pair(a, b).map(|p| p.images)
    }

    pub fn pixels(&self, a: DefectClass, b: DefectClass) -> Option<u64> {
        self.pair(a, b).map(|p| p.pixels)
    }

    fn merge(mut self, other: &CollisionReport) -> Self {
        self.images += other.images;
        for (p, q) in self.pairs.iter_mut().zip(&other.pairs) {
            p.images += q.images;
            p.pixels += q.pixels;
        }
        self
    }

    pub fn to_csv_table(&self) -> String {
        let mut out = String::from("pair,images,pixels\n");
        for p in &self.pairs {
            out.push_str(&format!("{}-{},{},{}\n", p.a.name(), p.b.name(), p.images, p.pixels));
        }
        out
    }
}

/// Collisions within one image. Absent layers cannot collide.
pub fn image_collisions(defects: &[Option<MaskLayer>; 3]) -> Result<CollisionReport> {
    let mut r = CollisionReport::empty();
    r.images = 1;
    for p in &mut r.pairs {
        if let (Some(a), Some(b)) = (&defects[p.a.index()], &defects[p.b.index()]) {
            b.ensure_dims(a.dims(), "collision audit")?;
            let n = a
                .codes()
                .iter()
                .zip(b.codes())
                .filter(|(&x, &y)| x != 0 && y != 0)
                .count() as u64;
            p.pixels = n;
            p.images = u64::from(n > 0);
        }
    }
    Ok(r)
}

pub fn audit_collisions(manifest: &Manifest) -> Result<CollisionReport> {
    let per_image = manifest
        .entries
        .par_iter()
        .map(|e| {
            let layers = DefectClass::ALL.map(|d| load_layer(e, Layer::Defect(d)));
            let [a, b, c] = layers;
            image_collisions(&[a?, b?, c?])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_image.iter().fold(CollisionReport::empty(), CollisionReport::merge))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPixelStats {
    pub code: u8,
    pub name: String,
    pub min_fraction: f64,
    pub max_fraction: f64,
    /// Mean of the per-image fractions.
    pub mean_fraction: f64,
    pub labeled_pixels: u64,
    pub zero_label_images: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PixelStats {
    pub layer: String,
    pub images: u64,
    pub classes: Vec<ClassPixelStats>,
}

impl PixelStats {
    pub fn class(&self, code: u8) -> Option<&ClassPixelStats> {
        self.classes.iter().find(|c| c.code == code)
    }
}

/// Per-class labelled-pixel fractions over masks sharing one code table.
pub fn pixel_stats_of<'a>(name: &str, table: CodeTable, masks: impl IntoIterator<Item = &'a MaskLayer>) -> PixelStats {
    let k = table.num_classes();
    let mut min = vec![f64::INFINITY; k];
    let mut max = vec![0.0f64; k];
    let mut sum = vec![0.0f64; k];
    let mut pixels = vec![0u64; k];
    let mut zero = vec![0u64; k];
    let mut images = 0u64;
    for m in masks {
        images += 1;
        let area = m.len().max(1) as f64;
        for (c, &n) in m.histogram().iter().enumerate() {
            let f = n as f64 / area;
            min[c] = min[c].min(f);
            max[c] = max[c].max(f);
            sum[c] += f;
            pixels[c] += n;
            zero[c] += u64::from(n == 0);
        }
    }
    let classes = (0..k)
        .map(|c| ClassPixelStats {
            code: c as u8,
            name: table.class_name(c as u8),
            min_fraction: if images == 0 { 0.0 } else { min[c] },
            max_fraction: max[c],
            mean_fraction: if images == 0 { 0.0 } else { sum[c] / images as f64 },
            labeled_pixels: pixels[c],
            zero_label_images: zero[c],
        })
        .collect();
    PixelStats {
        layer: name.to_string(),
        images,
        classes,
    }
}

/// Pixel statistics of one mask layer over a manifest. Every entry must
/// carry the layer.
pub fn class_pixel_stats(manifest: &Manifest, layer: Layer) -> Result<PixelStats> {
    let table = layer
        .table()
        .ok_or_else(|| Error::InvalidArgument("rgb is not a mask layer".into()))?;
    let masks = manifest
        .entries
        .par_iter()
        .map(|e| {
            load_layer(e, layer)?.ok_or_else(|| Error::LayerAbsent {
                id: e.id.clone(),
                layer: layer.name().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pixel_stats_of(layer.name(), table, &masks))
}
