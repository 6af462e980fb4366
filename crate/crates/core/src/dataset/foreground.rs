use std::path::Path;

use rayon::prelude::*;

use crate::classes::CodeTable;
use crate::dataset::load_layer;
use crate::error::{Error, Result};
use crate::manifest::{Layer, Manifest};
use crate::mask::MaskLayer;

/// Binary mask of the pixels whose component code is not Background.
pub fn foreground_from_components(components: &MaskLayer) -> MaskLayer {
    let codes = components.codes().iter().map(|&c| u8::from(c != 0)).collect();
    MaskLayer::from_codes(components.width(), components.height(), CodeTable::Binary, codes)
        .expect("binary codes")
}

/// Writes `<out_dir>/foreground/<id>.png` for every entry and returns the
/// manifest with the foreground layers attached.
pub fn build_foreground_masks(manifest: &Manifest, out_dir: &Path) -> Result<Manifest> {
    let dir = out_dir.join(Layer::Foreground.name());
    crate::io::ensure_dir(&dir)?;
    let entries = manifest
        .entries
        .par_iter()
        .map(|e| {
            let comp = load_layer(e, Layer::Components)?.ok_or_else(|| Error::LayerAbsent {
                id: e.id.clone(),
                layer: Layer::Components.name().to_string(),
            })?;
            let path = dir.join(format!("{}.png", e.id));
            foreground_from_components(&comp).save_png(&path)?;
            let mut out = e.clone();
            out.set_layer_path(Layer::Foreground, Some(std::path::absolute(&path).map_err(|err| Error::io(&path, err))?));
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Manifest {
        entries,
        split: manifest.split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_wall_pixel() {
        let mut c = MaskLayer::new(5, 5, CodeTable::Components);
        assert_eq!(foreground_from_components(&c).count_nonzero(), 0);
        c.set(2, 3, 1);
        let fg = foreground_from_components(&c);
        assert_eq!(fg.count_nonzero(), 1);
        assert_eq!(fg.get(2, 3), 1);
    }

    #[test]
    fn counts_match_nonzero_components() {
        let codes: Vec<u8> = (0..64).map(|i| (i * 7 % 8) as u8).collect();
        let c = MaskLayer::from_codes(8, 8, CodeTable::Components, codes).unwrap();
        assert_eq!(foreground_from_components(&c).count_nonzero(), c.count_nonzero());
    }
}
