//! 8-connected component labelling of mask layers.

use serde::Serialize;

use crate::classes::ComponentClass;
use crate::geometry::rect::{pixel_rect, RotatedRect};
use crate::mask::{MaskLayer, PixelRect};

/// One 8-connected region of a single code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentInstance {
    /// Position in raster order of each instance's first pixel.
    pub id: usize,
    pub code: u8,
    /// Member pixels as `(x, y)`, sorted in raster order.
    #[serde(skip)]
    pub pixels: Vec<(u32, u32)>,
    pub bbox: PixelRect,
}

impl ComponentInstance {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// The component class, when the instance came from a component layer.
    pub fn class(&self) -> Option<ComponentClass> {
        ComponentClass::from_code(self.code)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.bbox.contains(x, y) && self.pixels.binary_search_by(|&(px, py)| (py, px).cmp(&(y, x))).is_ok()
    }

    /// Minimum-area rotated rectangle covering every member pixel square.
    pub fn min_area_rect(&self) -> RotatedRect {
        pixel_rect(&self.pixels).expect("instances are never empty")
    }

    /// Number of member pixels set (non-zero) in `layer`.
    pub fn count_positive(&self, layer: &MaskLayer) -> u64 {
        self.pixels
            .iter()
            .filter(|&&(x, y)| layer.get(x, y) != 0)
            .count() as u64
    }

    /// Per-code histogram of `layer` over the member pixels.
    pub fn histogram(&self, layer: &MaskLayer) -> Vec<u64> {
        let mut h = vec![0u64; layer.table().num_classes()];
        for &(x, y) in &self.pixels {
            h[layer.get(x, y) as usize] += 1;
        }
        h
    }
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn label(mask: &MaskLayer, accept: impl Fn(u8) -> bool) -> Vec<ComponentInstance> {
    let (w, h) = mask.dims();
    let codes = mask.codes();
    let mut visited = vec![false; codes.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..codes.len() {
        let code = codes[start];
        if visited[start] || !accept(code) {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(idx) = stack.pop() {
            let x = (idx % w as usize) as i64;
            let y = (idx / w as usize) as i64;
            pixels.push((x as u32, y as u32));
            for (dx, dy) in NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= i64::from(w) || ny >= i64::from(h) {
                    continue;
                }
                let n = ny as usize * w as usize + nx as usize;
                if !visited[n] && codes[n] == code {
                    visited[n] = true;
                    stack.push(n);
                }
            }
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        let bbox = tight_bbox(&pixels);
        out.push(ComponentInstance {
            id: out.len(),
            code,
            pixels,
            bbox,
        });
    }
    out
}

fn tight_bbox(pixels: &[(u32, u32)]) -> PixelRect {
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for &(x, y) in pixels {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    PixelRect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
}

/// Splits the pixels of `code` into 8-connected instances, numbered in
/// raster order of their first pixel.
pub fn connected_components(mask: &MaskLayer, code: u8) -> Vec<ComponentInstance> {
    label(mask, |c| c == code)
}

/// Instances of every non-zero code, in raster order, dropping those with
/// fewer than `min_pixels` pixels. Ids are renumbered after filtering.
pub fn component_instances(mask: &MaskLayer, min_pixels: usize) -> Vec<ComponentInstance> {
    let mut out: Vec<ComponentInstance> = label(mask, |c| c != 0)
        .into_iter()
        .filter(|inst| inst.len() >= min_pixels)
        .collect();
    for (i, inst) in out.iter_mut().enumerate() {
        inst.id = i;
    }
    out
}
