//! Convex hull coverage of a centroid set relative to the data cloud.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Monotone-chain convex hull, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);

    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
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

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    twice.abs() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullRatio {
    pub ratio: f64,
    /// Set when either hull has zero area.
    pub degenerate: bool,
}

fn as_planar(points: ArrayView2<f64>) -> Result<Vec<[f64; 2]>> {
    if points.ncols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: points.ncols() });
    }
    Ok(points.outer_iter().map(|r| [r[0], r[1]]).collect())
}

/// Area(hull(centroids)) / Area(hull(data)), clamped to [0, 1].
pub fn hull_area_ratio(centroids: ArrayView2<f64>, data: ArrayView2<f64>) -> Result<HullRatio> {
    let c = polygon_area(&convex_hull(&as_planar(centroids)?));
    let z = polygon_area(&convex_hull(&as_planar(data)?));
    if c <= 0.0 || z <= 0.0 {
        return Ok(HullRatio { ratio: 0.0, degenerate: true });
    }
    Ok(HullRatio { ratio: (c / z).min(1.0), degenerate: false })
}
