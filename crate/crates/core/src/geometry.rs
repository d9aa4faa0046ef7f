//! Planar helpers behind map-distance normalization.
//!
//! The base map has on the order of ten thousand journals, so the diameter is
//! found with a monotone-chain convex hull followed by a rotating-calipers
//! scan over antipodal hull vertices instead of an all-pairs loop.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Squared Euclidean distance. Every distance in the crate goes through
    /// this expression so that results agree bit-for-bit.
    #[inline]
    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn lexicographic(a: &Point, b: &Point) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Convex hull in counter-clockwise order, collinear boundary points dropped.
///
/// Duplicates are removed first; one or two distinct inputs come back as-is.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_unstable_by(lexicographic);
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 2 {
        return pts;
    }

    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Largest pairwise Euclidean distance over `points` (0 for fewer than two
/// distinct points).
pub fn compute_diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    max_antipodal_distance_sq(&hull).sqrt()
}

fn max_antipodal_distance_sq(hull: &[Point]) -> f64 {
    let n = hull.len();
    match n {
        0 | 1 => return 0.0,
        2 => return hull[0].distance_sq(hull[1]),
        _ => {}
    }

    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..n {
        let ni = (i + 1) % n;
        // Advance j while the next vertex is farther from edge (i, ni).
        loop {
            let nj = (j + 1) % n;
            if cross(hull[i], hull[ni], hull[nj]) > cross(hull[i], hull[ni], hull[j]) {
                j = nj;
            } else {
                break;
            }
        }
        let nj = (j + 1) % n;
        best = best
            .max(hull[i].distance_sq(hull[j]))
            .max(hull[ni].distance_sq(hull[j]))
            .max(hull[i].distance_sq(hull[nj]))
            .max(hull[ni].distance_sq(hull[nj]));
    }
    best
}
