//! Closed-form and hull-based distance oracles, independent of the library
//! geometry. Shared with the CLI acceptance suite.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use svfix::geometry::{ConvexSet, Point};

pub fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

pub fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain hull, counter-clockwise.
pub fn hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn polygon_dist(p: [f64; 2], verts: &[[f64; 2]]) -> f64 {
    let h = hull(verts.to_vec());
    if h.len() == 1 {
        return ((p[0] - h[0][0]).powi(2) + (p[1] - h[0][1]).powi(2)).sqrt();
    }
    let edges = (0..h.len()).map(|i| (h[i], h[(i + 1) % h.len()]));
    let inside = h.len() >= 3 && edges.clone().all(|(a, b)| cross(a, b, p) >= 0.0);
    if inside {
        0.0
    } else {
        edges
            .map(|(a, b)| seg_dist(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Box([f64; 2], [f64; 2]),
    Ball([f64; 2], f64),
    Poly(Vec<[f64; 2]>),
}

impl Shape {
    pub fn set(&self) -> ConvexSet {
        match self {
            Shape::Box(lo, hi) => ConvexSet::boxed(lo.to_vec(), hi.to_vec()).unwrap(),
            Shape::Ball(c, r) => ConvexSet::ball(c.to_vec(), *r).unwrap(),
            Shape::Poly(v) => {
                ConvexSet::vpolytope(v.iter().map(|p| Point::new(p.to_vec())).collect()).unwrap()
            }
        }
    }

    pub fn oracle(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape::Box(lo, hi) => {
                let dx = (lo[0] - p[0]).max(p[0] - hi[0]).max(0.0);
                let dy = (lo[1] - p[1]).max(p[1] - hi[1]).max(0.0);
                (dx * dx + dy * dy).sqrt()
            }
            Shape::Ball(c, r) => {
                (((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r).max(0.0)
            }
            Shape::Poly(v) => polygon_dist(p, v),
        }
    }

    /// A point of the set: a box corner, a ball boundary point, a vertex.
    pub fn on_set(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        match self {
            Shape::Box(lo, hi) => [
                if rng.random_bool(0.5) { lo[0] } else { hi[0] },
                if rng.random_bool(0.5) { lo[1] } else { hi[1] },
            ],
            Shape::Ball(c, r) => [c[0] + r, c[1]],
            Shape::Poly(v) => v[rng.random_range(0..v.len())],
        }
    }
}

pub fn random_shape(rng: &mut ChaCha8Rng) -> Shape {
    let kind = rng.random_range(0..3);
    let mut c = || rng.random_range(-2.0f64..2.0);
    match kind {
        0 => {
            let (a, b, d, e) = (c(), c(), c(), c());
            Shape::Box([a.min(b), d.min(e)], [a.max(b), d.max(e)])
        }
        1 => {
            let ctr = [c(), c()];
            Shape::Ball(ctr, rng.random_range(0.05..1.5))
        }
        _ => {
            let n = rng.random_range(3..8);
            Shape::Poly(
                (0..n)
                    .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                    .collect(),
            )
        }
    }
}
