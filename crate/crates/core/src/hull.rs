//! Planar polygon helpers: monotone-chain hull, polygon support sampling and
//! the vertex description of a polar polygon.

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Point = [f64; 2];

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Convex hull in counter-clockwise order, collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
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

/// `max_v <v, (cos θ_j, sin θ_j)>` at every grid node, for a CCW convex polygon.
pub fn polygon_support(vertices: &[Point], grid: Grid) -> Vec<f64> {
    let m = vertices.len();
    assert!(m > 0, "empty polygon");
    let dir = |t: f64| [t.cos(), t.sin()];
    let u0 = dir(0.0);
    let mut k = (0..m)
        .max_by(|&a, &b| dot(vertices[a], u0).total_cmp(&dot(vertices[b], u0)))
        .unwrap();
    grid.nodes()
        .map(|t| {
            let u = dir(t);
            // The maximizing vertex only moves counter-clockwise as θ grows.
            for _ in 0..m {
                let next = (k + 1) % m;
                if dot(vertices[next], u) >= dot(vertices[k], u) {
                    k = next;
                } else {
                    break;
                }
            }
            dot(vertices[k], u)
        })
        .collect()
}

/// Vertices of the polar of a CCW convex polygon containing the origin in its
/// interior: each edge on the line `<x, n> = c` maps to the vertex `n / c`.
pub fn polar_vertices(hull: &[Point]) -> Result<Vec<Point>> {
    let m = hull.len();
    if m < 3 {
        return Err(Error::HullDegenerate(m));
    }
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let a = hull[i];
        let b = hull[(i + 1) % m];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        let n = [dy / len, -dx / len];
        let c = dot(a, n);
        if !(c > 0.0) {
            return Err(Error::HullDegenerate(m));
        }
        out.push([n[0] / c, n[1] / c]);
    }
    Ok(out)
}
