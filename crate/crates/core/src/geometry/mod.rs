//! Pixel geometry: instance labelling, rotated rectangles and warping.

pub mod components;
pub mod rect;
pub mod warp;

pub use components::{component_instances, connected_components, ComponentInstance};
pub use rect::{convex_hull, min_area_rect, pixel_rect, Point, RotatedRect};
pub use warp::{
    apply_foreground_mask, sample_bilinear, warp_mask_to_square, warp_to_square, PATCH_SIDE,
};
