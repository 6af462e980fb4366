//! Convex hulls and minimum-area rotated rectangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Rotated rectangle in continuous image coordinates (pixel `(i, j)` covers
/// `[i, i+1) x [j, j+1)`).
///
/// Canonical form: `width >= height`, `angle` is the direction of the
/// width side in degrees, in `(-90, 90]` (in `(-45, 45]` for squares), with
/// y pointing down as in image rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: Point,
    pub width: f64,
    pub height: f64,
    pub angle: f64,
}

impl RotatedRect {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Unit vectors along the width and height sides.
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.angle.to_radians().sin_cos();
        (Point::new(c, s), Point::new(-s, c))
    }

    /// Corners in canonical order: origin, +width, +width+height, +height.
    /// For an unrotated rectangle that is top-left, top-right, bottom-right,
    /// bottom-left.
    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let at = |a: f64, b: f64| {
            Point::new(
                self.center.x + a * u.x + b * v.x,
                self.center.y + a * u.y + b * v.y,
            )
        };
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }

    /// Whether `p` lies inside the rectangle grown by `tol` on every side.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let (u, v) = self.axes();
        let d = p.sub(self.center);
        d.dot(u).abs() <= self.width / 2.0 + tol && d.dot(v).abs() <= self.height / 2.0 + tol
    }

    fn canonical(center: Point, mut u: Point, mut width: f64, mut height: f64) -> Self {
        if height > width {
            std::mem::swap(&mut width, &mut height);
            u = Point::new(-u.y, u.x);
        }
        let mut angle = u.y.atan2(u.x).to_degrees();
        let square = (width - height).abs() <= 1e-9 * width.max(1.0);
        let (lo, hi, step) = if square { (-45.0, 45.0, 90.0) } else { (-90.0, 90.0, 180.0) };
        while angle > hi {
            angle -= step;
        }
        while angle <= lo {
            angle += step;
        }
        if angle.abs() < 1e-12 {
            angle = 0.0;
        }
        RotatedRect {
            center,
            width,
            height,
            angle,
        }
    }
}

/// Convex hull by Andrew's monotone chain, counter-clockwise in a y-up frame,
/// without collinear points. Fewer than three points come back for
/// degenerate input.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum-area enclosing rectangle of a point set, by rotating calipers
/// over the convex hull.
///
/// Collinear sets (and single points) have no area; they get a rectangle of
/// size `(extent + 1, 1)` along their direction so later warps never divide
/// by zero.
pub fn min_area_rect(points: &[Point]) -> Result<RotatedRect> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => Ok(RotatedRect {
            center: hull[0],
            width: 1.0,
            height: 1.0,
            angle: 0.0,
        }),
        2 => {
            let d = hull[1].sub(hull[0]);
            let len = d.norm();
            let center = Point::new((hull[0].x + hull[1].x) / 2.0, (hull[0].y + hull[1].y) / 2.0);
            let u = Point::new(d.x / len, d.y / len);
            Ok(RotatedRect::canonical(center, u, len + 1.0, 1.0))
        }
        _ => Ok(calipers(&hull)),
    }
}

fn calipers(hull: &[Point]) -> RotatedRect {
    let n = hull.len();
    let origin = hull[0];
    let pts: Vec<Point> = hull.iter().map(|p| p.sub(origin)).collect();
    let edge_axes = |i: usize| {
        let e = pts[(i + 1) % n].sub(pts[i]);
        let len = e.norm();
        let u = Point::new(e.x / len, e.y / len);
        (u, Point::new(-u.y, u.x))
    };

    let (u0, v0) = edge_axes(0);
    let argbest = |key: &dyn Fn(Point) -> f64| {
        (0..n).fold(0, |best, i| if key(pts[i]) > key(pts[best]) { i } else { best })
    };
    let mut far_u = argbest(&|p| p.dot(u0));
    let mut far_v = argbest(&|p| p.dot(v0));
    let mut near_u = argbest(&|p| -p.dot(u0));

    let mut best: Option<(f64, Point, f64, f64, f64, f64)> = None;
    for i in 0..n {
        let (u, v) = edge_axes(i);
        let mut guard = 0;
        while pts[(far_u + 1) % n].dot(u) > pts[far_u].dot(u) && guard < n {
            far_u = (far_u + 1) % n;
            guard += 1;
        }
        guard = 0;
        while pts[(far_v + 1) % n].dot(v) > pts[far_v].dot(v) && guard < n {
            far_v = (far_v + 1) % n;
            guard += 1;
        }
        guard = 0;
        while pts[(near_u + 1) % n].dot(u) < pts[near_u].dot(u) && guard < n {
            near_u = (near_u + 1) % n;
            guard += 1;
        }
        // The supporting edge itself is the extreme on the -v side.
        let min_v = pts[i].dot(v);
        let (min_u, max_u, max_v) = (pts[near_u].dot(u), pts[far_u].dot(u), pts[far_v].dot(v));
        let area = (max_u - min_u) * (max_v - min_v);
        if best.is_none_or(|b| area < b.0) {
            best = Some((area, u, min_u, max_u, min_v, max_v));
        }
    }
    let (_, u, min_u, max_u, min_v, max_v) = best.expect("hull has edges");
    let v = Point::new(-u.y, u.x);
    let (cu, cv) = ((min_u + max_u) / 2.0, (min_v + max_v) / 2.0);
    let center = Point::new(origin.x + cu * u.x + cv * v.x, origin.y + cu * u.y + cv * v.y);
    RotatedRect::canonical(center, u, max_u - min_u, max_v - min_v)
}

/// Minimum-area rectangle covering whole pixel squares. Only the outer
/// corners of each row's extreme pixels can lie on the hull.
pub fn pixel_rect(pixels: &[(u32, u32)]) -> Result<RotatedRect> {
    if pixels.is_empty() {
        return Err(Error::Empty("pixel set"));
    }
    let mut rows: std::collections::BTreeMap<u32, (u32, u32)> = std::collections::BTreeMap::new();
    for &(x, y) in pixels {
        let e = rows.entry(y).or_insert((x, x));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
    }
    let mut corners = Vec::with_capacity(rows.len() * 4);
    for (&y, &(x0, x1)) in &rows {
        let (y, x0, x1) = (f64::from(y), f64::from(x0), f64::from(x1) + 1.0);
        corners.extend([
            Point::new(x0, y),
            Point::new(x0, y + 1.0),
            Point::new(x1, y),
            Point::new(x1, y + 1.0),
        ]);
    }
    min_area_rect(&corners)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn axis_aligned_corners() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 4.0),
            Point::new(0.0, 4.0),
            Point::new(3.0, 2.0),
        ];
        let r = min_area_rect(&pts).unwrap();
        assert!(close(r.width, 10.0) && close(r.height, 4.0), "{r:?}");
        assert_eq!(r.angle, 0.0);
        assert!(close(r.center.x, 5.0) && close(r.center.y, 2.0));
    }

    #[test]
    fn pixel_block_covers_whole_pixels() {
        let pixels: Vec<(u32, u32)> = (0..4).flat_map(|y| (0..10).map(move |x| (x + 5, y + 7))).collect();
        let r = pixel_rect(&pixels).unwrap();
        assert!(close(r.width, 10.0) && close(r.height, 4.0));
        assert_eq!(r.angle, 0.0);
        assert!(close(r.center.x, 10.0) && close(r.center.y, 9.0));
        let tall: Vec<(u32, u32)> = (0..10).flat_map(|y| (0..4).map(move |x| (x, y))).collect();
        let t = pixel_rect(&tall).unwrap();
        assert!(close(t.width, 10.0) && close(t.height, 4.0));
        assert!(close(t.angle, 90.0), "{t:?}");
    }

    #[test]
    fn single_point_and_collinear() {
        let r = min_area_rect(&[Point::new(3.0, 4.0)]).unwrap();
        assert_eq!((r.width, r.height, r.angle), (1.0, 1.0, 0.0));
        assert_eq!(r.center, Point::new(3.0, 4.0));

        let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64, i as f64)).collect();
        let r = min_area_rect(&line).unwrap();
        assert!(close(r.width, 4.0 * 2f64.sqrt() + 1.0));
        assert!(close(r.height, 1.0));
        assert!(close(r.angle, 45.0));

        let px = pixel_rect(&[(2, 2)]).unwrap();
        assert_eq!((px.width, px.height, px.angle), (1.0, 1.0, 0.0));
        assert!(min_area_rect(&[]).is_err());
    }

    #[test]
    fn rotated_rectangle_recovered() {
        let (s, c) = 30f64.to_radians().sin_cos();
        let mut pts = Vec::new();
        for i in 0..=12 {
            for j in 0..=4 {
                let (a, b) = (i as f64 - 6.0, j as f64 - 2.0);
                pts.push(Point::new(50.0 + a * c - b * s, 40.0 + a * s + b * c));
            }
        }
        let r = min_area_rect(&pts).unwrap();
        assert!((r.width - 12.0).abs() < 1e-9 && (r.height - 4.0).abs() < 1e-9);
        assert!((r.angle - 30.0).abs() < 1e-9, "{r:?}");
        assert!((r.center.x - 50.0).abs() < 1e-9 && (r.center.y - 40.0).abs() < 1e-9);
    }

    /// Independent O(h^2) edge enumeration.
    fn edge_enumeration_area(points: &[Point]) -> f64 {
        let hull = convex_hull(points);
        let n = hull.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let e = hull[(i + 1) % n].sub(hull[i]);
            let u = Point::new(e.x / e.norm(), e.y / e.norm());
            let v = Point::new(-u.y, u.x);
            let pu: Vec<f64> = hull.iter().map(|p| p.dot(u)).collect();
            let pv: Vec<f64> = hull.iter().map(|p| p.dot(v)).collect();
            let span = |xs: &[f64]| {
                xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min)
            };
            best = best.min(span(&pu) * span(&pv));
        }
        best
    }

    #[test]
    fn calipers_match_edge_enumeration() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..300 {
            let n = 3 + rng.index(60);
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::new(rng.next_f64() * 100.0, rng.next_f64() * 60.0))
                .collect();
            let r = min_area_rect(&pts).unwrap();
            let oracle = edge_enumeration_area(&pts);
            assert!((r.area() - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {}", r.area(), oracle);
            assert!(r.width >= r.height);
            assert!(r.angle > -90.0 && r.angle <= 90.0);
            for p in &pts {
                assert!(r.contains(*p, 1e-7));
            }
        }
    }

    #[test]
    fn corners_in_canonical_order() {
        let r = RotatedRect {
            center: Point::new(5.0, 5.0),
            width: 4.0,
            height: 2.0,
            angle: 0.0,
        };
        let c = r.corners();
        assert_eq!(c[0], Point::new(3.0, 4.0));
        assert_eq!(c[1], Point::new(7.0, 4.0));
        assert_eq!(c[2], Point::new(7.0, 6.0));
        assert_eq!(c[3], Point::new(3.0, 6.0));
    }
}
