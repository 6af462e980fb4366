//! Miniature synthetic dataset with construction-time ground truth.
//!
//! Each image holds one or more facades; every facade is a grid of
//! rectangular components separated by background gaps. Defects are painted
//! into three disjoint vertical strips of a component's interior, so layers
//! only overlap where a collision is planted on purpose. The damage state
//! of a component follows a fixed rule over its defect ratios, which makes
//! the dataset learnable by the shallow classifiers.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::classes::{CodeTable, ComponentClass, DamageState, DefectClass};
use crate::error::{Error, Result};
use crate::io;
use crate::manifest::{ImageRecord, Layer, Manifest, ManifestEntry, SplitTag};
use crate::mask::{MaskLayer, PixelRect};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureSpec {
    pub images: usize,
    pub width: u32,
    pub height: u32,
    /// Facades side by side in each image.
    pub buildings: u32,
    pub grid_rows: u32,
    pub grid_cols: u32,
    /// Background pixels between neighbouring components.
    pub gap: u32,
    /// Background border around each facade.
    pub margin: u32,
    /// Distance from a component's edge to its defect strips.
    pub inset: u32,
    /// Probability that a component carries cracking, spalling, rebar.
    pub defect_density: [f64; 3],
    /// Probability, per class pair and component, of a planted overlap.
    pub collision_probability: f64,
    /// Probability that a component gets a minority patch of another state.
    pub contrast_probability: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            images: 12,
            width: 64,
            height: 64,
            buildings: 1,
            grid_rows: 3,
            grid_cols: 3,
            gap: 2,
            margin: 2,
            inset: 3,
            defect_density: [0.5, 0.4, 0.2],
            collision_probability: 0.3,
            contrast_probability: 0.25,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("fixture spec: {m}")));
        if self.images == 0 {
            return bad("needs at least one image");
        }
        if self.buildings == 0 || self.grid_rows == 0 || self.grid_cols == 0 {
            return bad("buildings and grid must be positive");
        }
        let probs = self
            .defect_density
            .iter()
            .chain([&self.collision_probability, &self.contrast_probability]);
        if probs.clone().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        let facade_w = self.width / self.buildings;
        let cell_w = facade_w.saturating_sub(2 * self.margin + (self.grid_cols - 1) * self.gap) / self.grid_cols;
        let cell_h = self.height.saturating_sub(2 * self.margin + (self.grid_rows - 1) * self.gap) / self.grid_rows;
        if cell_w < 4 || cell_h < 4 {
            return bad("image too small for the requested grid");
        }
        Ok(())
    }
}

/// Rule generating the damage state of a fixture component from its class
/// and defect ratios.
pub fn fixture_damage_rule(component: ComponentClass, crack_ratio: f64, spalling_ratio: f64, rebar_ratio: f64) -> DamageState {
    if rebar_ratio > 0.0 {
        DamageState::Severe
    } else if spalling_ratio > 0.04 {
        if matches!(component, ComponentClass::Column | ComponentClass::Beam) {
            DamageState::Severe
        } else {
            DamageState::Moderate
        }
    } else if crack_ratio > 0.0 || spalling_ratio > 0.0 {
        DamageState::Light
    } else {
        DamageState::NoDamage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    /// Raster order of the component's top-left pixel.
    pub id: usize,
    pub class: ComponentClass,
    pub bbox: PixelRect,
    pub pixels: u64,
    /// Positive pixels of cracking, spalling, rebar inside the component.
    pub defect_pixels: [u64; 3],
    /// Majority state, produced by [`fixture_damage_rule`].
    pub state: DamageState,
    /// Pixels painted with a different, minority state.
    pub contrast_pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCollision {
    pub a: DefectClass,
    pub b: DefectClass,
    pub pixels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureImageTruth {
    pub id: String,
    pub instances: Vec<PlantedInstance>,
    pub collisions: Vec<PlantedCollision>,
    /// Labelled pixels per component code.
    pub component_pixels: [u64; 8],
    /// Positive pixels per defect layer.
    pub defect_pixels: [u64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureTotals {
    pub instances: u64,
    /// Instances with at least one pixel of cracking, spalling, rebar.
    pub defect_instances: [u64; 3],
    /// Images with a planted overlap for each pair, in
    /// [`DefectClass::pairs`] order.
    pub collision_images: [u64; 3],
    pub collision_pixels: [u64; 3],
    pub states: [u64; 4],
    pub component_pixels: [u64; 8],
    pub defect_pixels: [u64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSidecar {
    pub seed: u64,
    pub spec: FixtureSpec,
    pub images: Vec<FixtureImageTruth>,
    pub totals: FixtureTotals,
}

impl FixtureSidecar {
    pub fn collision_images(&self, a: DefectClass, b: DefectClass) -> Option<u64> {
        DefectClass::pairs()
            .iter()
            .position(|&(p, q)| (p, q) == (a, b) || (p, q) == (b, a))
            .map(|i| self.totals.collision_images[i])
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

fn image_id(i: usize) -> String {
    format!("img_{i:03}")
}

const BACKGROUND: [u8; 3] = [120, 150, 190];
const PALETTE: [[u8; 3]; 8] = [
    [0, 0, 0],
    [200, 190, 170],
    [150, 110, 80],
    [170, 170, 175],
    [90, 90, 110],
    [60, 110, 150],
    [190, 150, 130],
    [140, 140, 120],
];
const DEFECT_COLORS: [[u8; 3]; 3] = [[25, 25, 25], [110, 105, 100], [150, 70, 30]];

fn jitter(rng: &mut SplitMix64, c: [u8; 3], amp: i64) -> Rgb<u8> {
    let d = rng.range_inclusive(-amp, amp);
    Rgb(c.map(|v| (i64::from(v) + d).clamp(0, 255) as u8))
}

struct Canvas {
    rgb: RgbImage,
    components: MaskLayer,
    defects: [MaskLayer; 3],
    damage: MaskLayer,
}

struct Cell {
    rect: PixelRect,
    class: ComponentClass,
}

fn layout(spec: &FixtureSpec, rng: &mut SplitMix64) -> Vec<Cell> {
    let facade_w = spec.width / spec.buildings;
    let cell_w = (facade_w - 2 * spec.margin - (spec.grid_cols - 1) * spec.gap) / spec.grid_cols;
    let cell_h = (spec.height - 2 * spec.margin - (spec.grid_rows - 1) * spec.gap) / spec.grid_rows;
    let mut cells = Vec::new();
    for b in 0..spec.buildings {
        let x0 = b * facade_w + spec.margin;
        for r in 0..spec.grid_rows {
            for c in 0..spec.grid_cols {
                let x = x0 + c * (cell_w + spec.gap);
                let y = spec.margin + r * (cell_h + spec.gap);
                // Shrink each side by up to one pixel to vary the shapes.
                let (l, t) = (rng.below(2) as u32, rng.below(2) as u32);
                let (rr, bb) = (rng.below(2) as u32, rng.below(2) as u32);
                let class = ComponentClass::STRUCTURAL[rng.index(ComponentClass::STRUCTURAL.len())];
                cells.push(Cell {
                    rect: PixelRect::new(x + l, y + t, cell_w - l - rr, cell_h - t - bb),
                    class,
                });
            }
        }
    }
    cells.sort_by_key(|c| (c.rect.y, c.rect.x));
    cells
}

/// Pixels of one defect painted in `strip` of a component interior.
fn defect_shape(defect: DefectClass, strip: PixelRect, rng: &mut SplitMix64) -> Vec<(u32, u32)> {
    let mut px = Vec::new();
    match defect {
        DefectClass::Cracking => {
            let len = 2 + rng.below(u64::from(strip.height - 1)) as u32;
            let y0 = strip.y + rng.below(u64::from(strip.height - len + 1)) as u32;
            let mut x = strip.x + rng.below(u64::from(strip.width)) as u32;
            for y in y0..y0 + len {
                px.push((x, y));
                let step = rng.range_inclusive(-1, 1);
                x = (i64::from(x) + step).clamp(i64::from(strip.x), i64::from(strip.right() - 1)) as u32;
            }
        }
        DefectClass::Spalling | DefectClass::ExposedRebar => {
            let max_h = if defect == DefectClass::ExposedRebar { 3.min(strip.height) } else { strip.height };
            let w = 1 + rng.below(u64::from(strip.width)) as u32;
            let h = 1 + rng.below(u64::from(max_h)) as u32;
            let x0 = strip.x + rng.below(u64::from(strip.width - w + 1)) as u32;
            let y0 = strip.y + rng.below(u64::from(strip.height - h + 1)) as u32;
            for y in y0..y0 + h {
                for x in x0..x0 + w {
                    px.push((x, y));
                }
            }
        }
    }
    px
}

fn paint_image(spec: &FixtureSpec, id: String, rng: &mut SplitMix64) -> (ImageRecord, FixtureImageTruth) {
    let (w, h) = (spec.width, spec.height);
    let mut cv = Canvas {
        rgb: RgbImage::new(w, h),
        components: MaskLayer::new(w, h, CodeTable::Components),
        defects: std::array::from_fn(|_| MaskLayer::new(w, h, CodeTable::Binary)),
        damage: MaskLayer::new(w, h, CodeTable::Damage),
    };
    for y in 0..h {
        for x in 0..w {
            let shade = (y * 40 / h.max(1)) as u8;
            let base = [BACKGROUND[0] - shade / 2, BACKGROUND[1] - shade / 2, BACKGROUND[2] - shade];
            cv.rgb.put_pixel(x, y, jitter(rng, base, 6));
        }
    }
    let mut truth = FixtureImageTruth {
        id: id.clone(),
        instances: Vec::new(),
        collisions: Vec::new(),
        component_pixels: [0; 8],
        defect_pixels: [0; 3],
    };
    let pairs = DefectClass::pairs();
    let mut pair_pixels = [0u64; 3];
    for (idx, cell) in layout(spec, rng).into_iter().enumerate() {
        let r = cell.rect;
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                cv.components.set(x, y, cell.class.code());
                cv.rgb.put_pixel(x, y, jitter(rng, PALETTE[cell.class.code() as usize], 8));
            }
        }
        let size = r.area();
        truth.component_pixels[cell.class.code() as usize] += size;

        let interior = PixelRect::new(
            r.x + spec.inset,
            r.y + spec.inset,
            r.width.saturating_sub(2 * spec.inset),
            r.height.saturating_sub(2 * spec.inset),
        );
        let mut painted: [BTreeSet<(u32, u32)>; 3] = Default::default();
        let mut originals: [Vec<(u32, u32)>; 3] = Default::default();
        if interior.width >= 3 && interior.height >= 2 {
            let sw = interior.width / 3;
            for d in DefectClass::ALL {
                let k = d.index() as u32;
                let strip_w = if k == 2 { interior.width - 2 * sw } else { sw };
                let strip = PixelRect::new(interior.x + k * sw, interior.y, strip_w, interior.height);
                if rng.chance(spec.defect_density[d.index()]) {
                    let shape = defect_shape(d, strip, rng);
                    painted[d.index()].extend(shape.iter().copied());
                    originals[d.index()] = shape;
                }
            }
            let mut used: HashSet<(u32, u32)> = HashSet::new();
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let pool: Vec<(u32, u32)> = originals[a.index()].iter().copied().filter(|q| !used.contains(q)).collect();
                if pool.is_empty() || !rng.chance(spec.collision_probability) {
                    continue;
                }
                let m = 1 + rng.index(pool.len().min(3));
                for j in rng.sample_indices(pool.len(), m) {
                    used.insert(pool[j]);
                    painted[b.index()].insert(pool[j]);
                }
                pair_pixels[p] += m as u64;
            }
        }
        let mut defect_pixels = [0u64; 3];
        for d in DefectClass::ALL {
            for &(x, y) in &painted[d.index()] {
                cv.defects[d.index()].set(x, y, 1);
                cv.rgb.put_pixel(x, y, jitter(rng, DEFECT_COLORS[d.index()], 5));
            }
            defect_pixels[d.index()] = painted[d.index()].len() as u64;
        }
        let ratio = |d: DefectClass| defect_pixels[d.index()] as f64 / size as f64;
        let state = fixture_damage_rule(
            cell.class,
            ratio(DefectClass::Cracking),
            ratio(DefectClass::Spalling),
            ratio(DefectClass::ExposedRebar),
        );
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                cv.damage.set(x, y, state.code());
            }
        }
        let mut contrast_pixels = 0;
        if rng.chance(spec.contrast_probability) {
            let other = DamageState::ALL[(state as usize + 1 + rng.index(3)) % 4];
            let rows = (r.height * 3 / 10).max(1);
            for y in r.y..r.y + rows {
                for x in r.x..r.right() {
                    cv.damage.set(x, y, other.code());
                }
            }
            contrast_pixels = u64::from(rows * r.width);
        }
        for (total, n) in truth.defect_pixels.iter_mut().zip(defect_pixels) {
            *total += n;
        }
        truth.instances.push(PlantedInstance {
            id: idx,
            class: cell.class,
            bbox: r,
            pixels: size,
            defect_pixels,
            state,
            contrast_pixels,
        });
    }
    truth.collisions = pairs
        .iter()
        .zip(pair_pixels)
        .filter(|(_, n)| *n > 0)
        .map(|(&(a, b), pixels)| PlantedCollision { a, b, pixels })
        .collect();

    let mut record = ImageRecord::new(id, cv.rgb);
    let fg = crate::dataset::foreground_from_components(&cv.components);
    record.component_mask = Some(cv.components);
    record.damage_mask = Some(cv.damage);
    record.foreground_mask = Some(fg);
    let [c, s, rb] = cv.defects;
    record.defect_masks = crate::manifest::DefectMasks([Some(c), Some(s), Some(rb)]);
    (record, truth)
}

/// Renders the fixture in memory. Image `i` draws from the stream
/// `derive_seed(seed, i)`.
pub fn render_fixture(spec: &FixtureSpec, seed: u64) -> Result<Vec<(ImageRecord, FixtureImageTruth)>> {
    spec.validate()?;
    Ok((0..spec.images)
        .map(|i| paint_image(spec, image_id(i), &mut SplitMix64::new(derive_seed(seed, i as u64))))
        .collect())
}

fn totals(images: &[FixtureImageTruth]) -> FixtureTotals {
    let mut t = FixtureTotals::default();
    for img in images {
        for inst in &img.instances {
            t.instances += 1;
            t.states[inst.state as usize] += 1;
            for d in 0..3 {
                t.defect_instances[d] += u64::from(inst.defect_pixels[d] > 0);
            }
        }
        for c in &img.collisions {
            let p = DefectClass::pairs().iter().position(|&q| q == (c.a, c.b)).expect("known pair");
            t.collision_images[p] += 1;
            t.collision_pixels[p] += c.pixels;
        }
        for k in 0..8 {
            t.component_pixels[k] += img.component_pixels[k];
        }
        for d in 0..3 {
            t.defect_pixels[d] += img.defect_pixels[d];
        }
    }
    t
}

/// Writes the fixture under `out`:
/// `{rgb,components,cracking,spalling,rebar,damage,foreground}/<id>.png`,
/// `manifest.json` and `sidecar.json`. The per-stage mask directories also
/// follow the external-mask adapter layout.
pub fn generate_fixture_dataset(spec: &FixtureSpec, seed: u64, out: &Path) -> Result<(Manifest, FixtureSidecar)> {
    let rendered = render_fixture(spec, seed)?;
    io::ensure_dir(out)?;
    let root = std::path::absolute(out).map_err(|e| Error::io(out, e))?;
    let mut entries = Vec::new();
    let mut truths = Vec::new();
    for (record, truth) in rendered {
        let rgb = root.join("rgb").join(format!("{}.png", record.id));
        io::save_rgb(&record.rgb, &rgb)?;
        let mut entry = ManifestEntry::new(record.id.clone(), rgb);
        for layer in Layer::MASKS {
            let path = root.join(layer.name()).join(format!("{}.png", record.id));
            let mask = record.layer(layer).expect("fixture records carry every layer");
            io::ensure_parent(&path)?;
            mask.save_png(&path)?;
            entry.set_layer_path(layer, Some(path));
        }
        entries.push(entry);
        truths.push(truth);
    }
    let manifest = Manifest::new(entries, SplitTag::Unsplit)?;
    manifest.save(&root.join("manifest.json"))?;
    let sidecar = FixtureSidecar {
        seed,
        spec: spec.clone(),
        totals: totals(&truths),
        images: truths,
    };
    io::write_json(&root.join("sidecar.json"), &sidecar)?;
    Ok((manifest, sidecar))
}
