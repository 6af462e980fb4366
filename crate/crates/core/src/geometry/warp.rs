//! Rotated-rectangle patch extraction and foreground masking.

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::rect::{Point, RotatedRect};
use crate::mask::MaskLayer;

/// Default side of warped surface patches.
pub const PATCH_SIDE: u32 = 224;

/// Affine map from output-square coordinates to source coordinates sending
/// the square's corners to the rectangle's canonical corners.
struct SquareToRect {
    origin: Point,
    du: Point,
    dv: Point,
}

impl SquareToRect {
    fn new(rect: &RotatedRect, side: u32) -> Self {
        let [p0, p1, _, p3] = rect.corners();
        let s = f64::from(side);
        Self {
            origin: p0,
            du: Point::new((p1.x - p0.x) / s, (p1.y - p0.y) / s),
            dv: Point::new((p3.x - p0.x) / s, (p3.y - p0.y) / s),
        }
    }

    /// Source position of the centre of output pixel `(u, v)`.
    fn source(&self, u: u32, v: u32) -> Point {
        let (a, b) = (f64::from(u) + 0.5, f64::from(v) + 0.5);
        Point::new(
            self.origin.x + a * self.du.x + b * self.dv.x,
            self.origin.y + a * self.du.y + b * self.dv.y,
        )
    }
}

fn check_rect(rect: &RotatedRect, width: u32, height: u32, side: u32) -> Result<()> {
    if side == 0 {
        return Err(Error::InvalidArgument("patch side must be positive".into()));
    }
    if !(rect.width > 0.0 && rect.height > 0.0) || !rect.center.x.is_finite() || !rect.center.y.is_finite() {
        return Err(Error::Degenerate("rectangle has no area"));
    }
    let corners = rect.corners();
    let min_x = corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = corners.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = corners.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    if max_x <= 0.0 || max_y <= 0.0 || min_x >= f64::from(width) || min_y >= f64::from(height) {
        return Err(Error::InvalidArgument("rectangle lies entirely outside the image".into()));
    }
    Ok(())
}

/// Bilinear sample at continuous position `p` (pixel centres at `i + 0.5`).
/// Samples outside the image read as black.
pub fn sample_bilinear(img: &RgbImage, p: Point) -> [f64; 3] {
    let (fx, fy) = (p.x - 0.5, p.y - 0.5);
    let (x0, y0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - x0, fy - y0);
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    let mut acc = [0.0; 3];
    for (dx, dy, wt) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        if wt == 0.0 {
            continue;
        }
        let (x, y) = (x0 as i64 + dx, y0 as i64 + dy);
        if x < 0 || y < 0 || x >= w || y >= h {
            continue;
        }
        let px = img.get_pixel(x as u32, y as u32).0;
        for c in 0..3 {
            acc[c] += wt * f64::from(px[c]);
        }
    }
    acc
}

/// Warps the content of `rect` onto a `side`×`side` patch by inverse
/// mapping with bilinear sampling. Corner `k` of the rectangle (canonical
/// order) lands on the corresponding output corner.
pub fn warp_to_square(rgb: &RgbImage, rect: &RotatedRect, side: u32) -> Result<RgbImage> {
    check_rect(rect, rgb.width(), rgb.height(), side)?;
    let map = SquareToRect::new(rect, side);
    Ok(RgbImage::from_fn(side, side, |u, v| {
        let s = sample_bilinear(rgb, map.source(u, v));
        Rgb(s.map(|c| c.round().clamp(0.0, 255.0) as u8))
    }))
}

/// Nearest-neighbour counterpart of [`warp_to_square`] for label layers.
/// Samples outside the layer read as code 0.
pub fn warp_mask_to_square(mask: &MaskLayer, rect: &RotatedRect, side: u32) -> Result<MaskLayer> {
    check_rect(rect, mask.width(), mask.height(), side)?;
    let map = SquareToRect::new(rect, side);
    let mut out = MaskLayer::new(side, side, mask.table());
    for v in 0..side {
        for u in 0..side {
            let p = map.source(u, v);
            let (x, y) = (p.x.floor(), p.y.floor());
            if x >= 0.0 && y >= 0.0 && x < f64::from(mask.width()) && y < f64::from(mask.height()) {
                out.set(u, v, mask.get(x as u32, y as u32));
            }
        }
    }
    Ok(out)
}

/// Replaces every pixel whose foreground code is 0 with `fill`.
pub fn apply_foreground_mask(rgb: &RgbImage, fg: &MaskLayer, fill: [u8; 3]) -> Result<RgbImage> {
    fg.ensure_dims(rgb.dimensions(), "foreground mask")?;
    let mut out = rgb.clone();
    for (x, y, px) in out.enumerate_pixels_mut() {
        if fg.get(x, y) == 0 {
            *px = Rgb(fill);
        }
    }
    Ok(out)
}
