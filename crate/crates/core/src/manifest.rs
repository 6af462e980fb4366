//! Dataset manifests and in-memory image records.
//!
//! A manifest is a JSON document listing one entry per image:
//!
//! ```json
//! {"entries":[{"id":"img_000","rgb":"rgb/img_000.png","components":"components/img_000.png",
//!   "defects":{"cracking":"cracking/img_000.png","spalling":null,"rebar":null},
//!   "damage":null,"foreground":null}],"split":"unsplit"}
//! ```
//!
//! Relative paths resolve against the directory holding the manifest.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::classes::{CodeTable, DefectClass};
use crate::error::{Error, Result};
use crate::io;
use crate::mask::MaskLayer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    #[default]
    Unsplit,
    Train,
    Test,
}

/// One raster layer of a dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Rgb,
    Components,
    Defect(DefectClass),
    Damage,
    Foreground,
}

impl Layer {
    pub const MASKS: [Layer; 6] = [
        Layer::Components,
        Layer::Defect(DefectClass::Cracking),
        Layer::Defect(DefectClass::Spalling),
        Layer::Defect(DefectClass::ExposedRebar),
        Layer::Damage,
        Layer::Foreground,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Rgb => "rgb",
            Layer::Components => "components",
            Layer::Defect(d) => d.name(),
            Layer::Damage => "damage",
            Layer::Foreground => "foreground",
        }
    }

    /// Code table of a mask layer; `None` for the RGB layer.
    pub fn table(self) -> Option<CodeTable> {
        match self {
            Layer::Rgb => None,
            Layer::Components => Some(CodeTable::Components),
            Layer::Defect(_) | Layer::Foreground => Some(CodeTable::Binary),
            Layer::Damage => Some(CodeTable::Damage),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectPaths {
    #[serde(default)]
    pub cracking: Option<PathBuf>,
    #[serde(default)]
    pub spalling: Option<PathBuf>,
    #[serde(default)]
    pub rebar: Option<PathBuf>,
}

impl DefectPaths {
    pub fn get(&self, defect: DefectClass) -> Option<&PathBuf> {
        match defect {
            DefectClass::Cracking => self.cracking.as_ref(),
            DefectClass::Spalling => self.spalling.as_ref(),
            DefectClass::ExposedRebar => self.rebar.as_ref(),
        }
    }

    pub fn set(&mut self, defect: DefectClass, path: Option<PathBuf>) {
        match defect {
            DefectClass::Cracking => self.cracking = path,
            DefectClass::Spalling => self.spalling = path,
            DefectClass::ExposedRebar => self.rebar = path,
        }
    }

    fn is_empty(&self) -> bool {
        self.cracking.is_none() && self.spalling.is_none() && self.rebar.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub rgb: PathBuf,
    #[serde(default)]
    pub components: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "DefectPaths::is_empty")]
    pub defects: DefectPaths,
    #[serde(default)]
    pub damage: Option<PathBuf>,
    #[serde(default)]
    pub foreground: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, rgb: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            rgb: rgb.into(),
            components: None,
            defects: DefectPaths::default(),
            damage: None,
            foreground: None,
        }
    }

    pub fn layer_path(&self, layer: Layer) -> Option<&PathBuf> {
        match layer {
            Layer::Rgb => Some(&self.rgb),
            Layer::Components => self.components.as_ref(),
            Layer::Defect(d) => self.defects.get(d),
            Layer::Damage => self.damage.as_ref(),
            Layer::Foreground => self.foreground.as_ref(),
        }
    }

    pub fn set_layer_path(&mut self, layer: Layer, path: Option<PathBuf>) {
        match layer {
            Layer::Rgb => self.rgb = path.expect("rgb layer is mandatory"),
            Layer::Components => self.components = path,
            Layer::Defect(d) => self.defects.set(d, path),
            Layer::Damage => self.damage = path,
            Layer::Foreground => self.foreground = path,
        }
    }

    fn map_paths(&self, f: impl Fn(&Path) -> PathBuf) -> ManifestEntry {
        let mut out = self.clone();
        out.rgb = f(&self.rgb);
        for layer in Layer::MASKS {
            out.set_layer_path(layer, self.layer_path(layer).map(|p| f(p)));
        }
        out
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ManifestDoc {
    #[serde(default)]
    entries: Vec<ManifestEntry>,
    #[serde(default)]
    split: SplitTag,
}

/// A validated list of dataset entries with absolute layer paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub split: SplitTag,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>, split: SplitTag) -> Result<Self> {
        let m = Self { entries, split };
        m.check_ids()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }

    /// Loads every layer of `entry` into memory, validating codes and
    /// dimensions.
    pub fn load_record(&self, entry: &ManifestEntry) -> Result<ImageRecord> {
        ImageRecord::load(entry)
    }

    /// Loads all records in manifest order.
    pub fn records(&self) -> impl Iterator<Item = Result<ImageRecord>> + '_ {
        self.entries.iter().map(ImageRecord::load)
    }

    /// Writes the manifest; paths under the manifest's directory are stored
    /// relative to it, others stay absolute.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path
            .parent()
            .map(absolute)
            .transpose()?
            .unwrap_or_default();
        let doc = ManifestDoc {
            entries: self
                .entries
                .iter()
                .map(|e| {
                    e.map_paths(|p| match p.strip_prefix(&base) {
                        Ok(rel) => rel.to_path_buf(),
                        Err(_) => p.to_path_buf(),
                    })
                })
                .collect(),
            split: self.split,
        };
        io::write_json(path, &doc)
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    if p.as_os_str().is_empty() {
        return std::env::current_dir().map_err(|e| Error::io(".", e));
    }
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

/// Reads and validates a manifest document.
///
/// Fails on duplicate ids, on any referenced layer file that does not
/// exist, on mask/image dimension mismatch and on any mask code outside the
/// layer's table (every mask is scanned in full).
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let doc: ManifestDoc = io::read_json(path)?;
    let base = absolute(path.parent().unwrap_or(Path::new("")))?;
    let entries: Vec<ManifestEntry> = doc
        .entries
        .iter()
        .map(|e| e.map_paths(|p| base.join(p)))
        .collect();
    let manifest = Manifest::new(entries, doc.split)?;
    for entry in &manifest.entries {
        validate_entry(entry)?;
    }
    Ok(manifest)
}

fn validate_entry(entry: &ManifestEntry) -> Result<()> {
    for layer in std::iter::once(Layer::Rgb).chain(Layer::MASKS) {
        if let Some(p) = entry.layer_path(layer) {
            if !p.is_file() {
                return Err(Error::MissingLayer {
                    id: entry.id.clone(),
                    layer: layer.name().to_string(),
                    path: p.clone(),
                });
            }
        }
    }
    let dims = image::image_dimensions(&entry.rgb).map_err(|e| Error::image(&entry.rgb, e))?;
    for layer in Layer::MASKS {
        if let Some(p) = entry.layer_path(layer) {
            let mask = MaskLayer::load_png(p, layer.table().expect("mask layer"))?;
            mask.ensure_dims(dims, &format!("{}/{}", entry.id, layer))?;
        }
    }
    Ok(())
}

/// Per-defect binary layers, indexed by [`DefectClass::index`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefectMasks(pub [Option<MaskLayer>; 3]);

impl DefectMasks {
    pub fn get(&self, defect: DefectClass) -> Option<&MaskLayer> {
        self.0[defect.index()].as_ref()
    }

    pub fn set(&mut self, defect: DefectClass, mask: Option<MaskLayer>) {
        self.0[defect.index()] = mask;
    }

    pub fn iter(&self) -> impl Iterator<Item = (DefectClass, &MaskLayer)> {
        DefectClass::ALL
            .into_iter()
            .filter_map(|d| self.get(d).map(|m| (d, m)))
    }
}

/// One image with whichever label layers are available.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub rgb: RgbImage,
    pub component_mask: Option<MaskLayer>,
    pub defect_masks: DefectMasks,
    pub damage_mask: Option<MaskLayer>,
    pub foreground_mask: Option<MaskLayer>,
}

impl ImageRecord {
    pub fn new(id: impl Into<String>, rgb: RgbImage) -> Self {
        Self {
            id: id.into(),
            rgb,
            component_mask: None,
            defect_masks: DefectMasks::default(),
            damage_mask: None,
            foreground_mask: None,
        }
    }

    pub fn dims(&self) -> (u32, u32) {
        self.rgb.dimensions()
    }

    pub fn area(&self) -> u64 {
        u64::from(self.rgb.width()) * u64::from(self.rgb.height())
    }

    pub fn load(entry: &ManifestEntry) -> Result<Self> {
        let rgb = io::load_rgb(&entry.rgb)?;
        let mut rec = ImageRecord::new(entry.id.clone(), rgb);
        for layer in Layer::MASKS {
            if let Some(p) = entry.layer_path(layer) {
                if !p.is_file() {
                    return Err(Error::MissingLayer {
                        id: entry.id.clone(),
                        layer: layer.name().to_string(),
                        path: p.clone(),
                    });
                }
                let mask = MaskLayer::load_png(p, layer.table().expect("mask layer"))?;
                rec.set_layer(layer, Some(mask))?;
            }
        }
        Ok(rec)
    }

    pub fn layer(&self, layer: Layer) -> Option<&MaskLayer> {
        match layer {
            Layer::Rgb => None,
            Layer::Components => self.component_mask.as_ref(),
            Layer::Defect(d) => self.defect_masks.get(d),
            Layer::Damage => self.damage_mask.as_ref(),
            Layer::Foreground => self.foreground_mask.as_ref(),
        }
    }

    /// Like [`ImageRecord::layer`] but an absent layer is an error.
    pub fn require(&self, layer: Layer) -> Result<&MaskLayer> {
        self.layer(layer).ok_or_else(|| Error::LayerAbsent {
            id: self.id.clone(),
            layer: layer.name().to_string(),
        })
    }

    /// Attaches a mask, checking its table and its dimensions against the
    /// RGB raster.
    pub fn set_layer(&mut self, layer: Layer, mask: Option<MaskLayer>) -> Result<()> {
        if let Some(m) = &mask {
            let table = layer.table().ok_or_else(|| {
                Error::InvalidArgument("rgb is not a mask layer".to_string())
            })?;
            if m.table() != table {
                return Err(Error::InvalidArgument(format!(
                    "layer {layer} expects the {} table, got {}",
                    table.name(),
                    m.table().name()
                )));
            }
            m.ensure_dims(self.dims(), &format!("{}/{}", self.id, layer))?;
        }
        match layer {
            Layer::Rgb => unreachable!(),
            Layer::Components => self.component_mask = mask,
            Layer::Defect(d) => self.defect_masks.set(d, mask),
            Layer::Damage => self.damage_mask = mask,
            Layer::Foreground => self.foreground_mask = mask,
        }
        Ok(())
    }
}
