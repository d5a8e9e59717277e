//! Closed convex sets in `R^k` and the Euclidean queries the rest of the crate
//! is built on: membership, distance, projection, support function, Minkowski
//! inflation by balls, one-sided excess between finite sets, and rotundity.
//!
//! Every representation answers `contains`, `distance` and `support` exactly:
//!
//! | representation | distance                         | support `h(u)`                  |
//! |----------------|----------------------------------|---------------------------------|
//! | `Box`          | clamp per coordinate             | `sum max(lo_i u_i, hi_i u_i)`   |
//! | `Ball`         | `max(0, |p - c| - r)`            | `<c,u> + r |u|`                 |
//! | `Segment`      | clamp of the line parameter      | `max(<p,u>, <q,u>)`             |
//! | `HPolytope`    | active-set enumeration (k <= 4)  | max over enumerated vertices    |
//! | `VPolytope`    | simplex enumeration (k <= 4)     | max over vertices               |

mod point;
mod polytope;
mod rotund;

pub use point::{axpy, blend, dist, dot, norm, normalized, sub, Point};
pub use polytope::{HPolytope, HalfSpace, VPolytope, MAX_POLYTOPE_DIM};
pub(crate) use rotund::pair_threshold;
pub use rotund::{
    rotund_check, RotundWitness, Rotundity, RotundityVerdict, DEFAULT_ROTUND_SAMPLES, PAIR_PROBES,
};

use thiserror::Error;

/// Default interior margin: `p` is interior at margin `eta` when `Ball{p, eta}` lies in the set.
pub const DEFAULT_INTERIOR_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("empty set")]
    EmptySet,
    #[error("invalid set: {0}")]
    InvalidSet(String),
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    lo: Point,
    hi: Point,
}

impl AxisBox {
    pub fn new(lo: impl Into<Point>, hi: impl Into<Point>) -> Result<Self, GeometryError> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo.dim() != hi.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.dim(),
                found: hi.dim(),
            });
        }
        if lo.dim() == 0 {
            return Err(GeometryError::InvalidSet(
                "box needs at least one coordinate".into(),
            ));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::InvalidSet(
                "box bounds must be finite".into(),
            ));
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(GeometryError::InvalidSet(format!(
                "box needs lo <= hi, got {lo} > {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(x, (a, b))| *x >= a - tol && *x <= b + tol)
    }

    pub fn clamp(&self, p: &[f64]) -> Point {
        Point::new(
            p.iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .map(|(x, (a, b))| x.clamp(*a, *b))
                .collect(),
        )
    }

    pub fn center(&self) -> Point {
        Point::new(blend(&self.lo, &self.hi, 0.5))
    }

    pub fn corners(&self) -> Vec<Point> {
        let k = self.dim();
        let mut out = Vec::with_capacity(1 << k.min(16));
        for mask in 0..(1usize << k) {
            let c: Vec<f64> = (0..k)
                .map(|i| {
                    if mask >> (k - 1 - i) & 1 == 1 {
                        self.hi[i]
                    } else {
                        self.lo[i]
                    }
                })
                .collect();
            let c = Point::new(c);
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Outward facet rows `e_i · x <= hi_i` and `-e_i · x <= -lo_i`.
    pub fn facet_rows(&self) -> Vec<HalfSpace> {
        let k = self.dim();
        let mut rows = Vec::with_capacity(2 * k);
        for i in 0..k {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            rows.push(HalfSpace::new(e.clone(), self.hi[i]));
            e[i] = -1.0;
            rows.push(HalfSpace::new(e, -self.lo[i]));
        }
        rows
    }

    /// Largest distance from a point of `self` to `other`; exact since the
    /// squared distance to a box separates over coordinates.
    pub fn excess_over(&self, other: &AxisBox) -> f64 {
        (0..self.dim())
            .map(|i| {
                let e = (other.lo[i] - self.lo[i])
                    .max(self.hi[i] - other.hi[i])
                    .max(0.0);
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: impl Into<Point>, radius: f64) -> Result<Self, GeometryError> {
        let center = center.into();
        if center.dim() == 0 || !center.is_finite() {
            return Err(GeometryError::InvalidSet(
                "ball center must be a finite point".into(),
            ));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidSet(format!(
                "ball radius must be >= 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Closed segment `[p, q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    p: Point,
    q: Point,
}

impl Segment {
    pub fn new(p: impl Into<Point>, q: impl Into<Point>) -> Result<Self, GeometryError> {
        let (p, q) = (p.into(), q.into());
        if p.dim() != q.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: p.dim(),
                found: q.dim(),
            });
        }
        if p.dim() == 0 || !p.is_finite() || !q.is_finite() {
            return Err(GeometryError::InvalidSet(
                "segment endpoints must be finite points".into(),
            ));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &Point {
        &self.p
    }

    pub fn q(&self) -> &Point {
        &self.q
    }

    fn project(&self, x: &[f64]) -> Point {
        let d = sub(&self.q, &self.p);
        let dd = dot(&d, &d);
        if dd == 0.0 {
            return self.p.clone();
        }
        let t = (dot(&sub(x, &self.p), &d) / dd).clamp(0.0, 1.0);
        Point::new(axpy(&self.p, t, &d))
    }
}

/// A closed convex subset of `R^k`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Box(AxisBox),
    Ball(Ball),
    HPolytope(HPolytope),
    VPolytope(VPolytope),
    Segment(Segment),
}

impl From<AxisBox> for ConvexSet {
    fn from(b: AxisBox) -> Self {
        ConvexSet::Box(b)
    }
}

impl From<Ball> for ConvexSet {
    fn from(b: Ball) -> Self {
        ConvexSet::Ball(b)
    }
}

impl From<HPolytope> for ConvexSet {
    fn from(p: HPolytope) -> Self {
        ConvexSet::HPolytope(p)
    }
}

impl From<VPolytope> for ConvexSet {
    fn from(p: VPolytope) -> Self {
        ConvexSet::VPolytope(p)
    }
}

impl From<Segment> for ConvexSet {
    fn from(s: Segment) -> Self {
        ConvexSet::Segment(s)
    }
}

impl ConvexSet {
    pub fn boxed(lo: impl Into<Point>, hi: impl Into<Point>) -> Result<Self, GeometryError> {
        AxisBox::new(lo, hi).map(ConvexSet::Box)
    }

    pub fn ball(center: impl Into<Point>, radius: f64) -> Result<Self, GeometryError> {
        Ball::new(center, radius).map(ConvexSet::Ball)
    }

    pub fn segment(p: impl Into<Point>, q: impl Into<Point>) -> Result<Self, GeometryError> {
        Segment::new(p, q).map(ConvexSet::Segment)
    }

    pub fn hpolytope(rows: Vec<HalfSpace>) -> Result<Self, GeometryError> {
        HPolytope::new(rows).map(ConvexSet::HPolytope)
    }

    pub fn vpolytope(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        VPolytope::new(vertices).map(ConvexSet::VPolytope)
    }

    /// The singleton `{p}`, stored as a degenerate box.
    pub fn singleton(p: impl Into<Point>) -> Result<Self, GeometryError> {
        let p = p.into();
        AxisBox::new(p.clone(), p).map(ConvexSet::Box)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box(b) => b.dim(),
            ConvexSet::Ball(b) => b.center.dim(),
            ConvexSet::HPolytope(p) => p.dim(),
            ConvexSet::VPolytope(p) => p.dim(),
            ConvexSet::Segment(s) => s.p.dim(),
        }
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(())
    }

    /// Membership with absolute tolerance `tol` (use 0 for exact membership).
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        match self {
            ConvexSet::Box(b) => b.contains(p, tol),
            ConvexSet::Ball(b) => dist(p, &b.center) <= b.radius + tol,
            ConvexSet::HPolytope(h) => h.contains(p, tol),
            ConvexSet::VPolytope(_) | ConvexSet::Segment(_) => self.distance(p) <= tol,
        }
    }

    /// Metric projection onto the set.
    pub fn project(&self, p: &[f64]) -> Point {
        match self {
            ConvexSet::Box(b) => b.clamp(p),
            ConvexSet::Ball(b) => {
                let d = dist(p, &b.center);
                if d <= b.radius {
                    Point::from(p)
                } else {
                    let dir = sub(p, &b.center);
                    Point::new(axpy(&b.center, b.radius / d, &dir))
                }
            }
            ConvexSet::HPolytope(h) => h.project(p),
            ConvexSet::VPolytope(v) => v.project(p),
            ConvexSet::Segment(s) => s.project(p),
        }
    }

    /// Unchecked Euclidean distance; see [`distance_point_set`] for the checked form.
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            ConvexSet::Box(b) => p
                .iter()
                .zip(b.lo.iter().zip(b.hi.iter()))
                .map(|(x, (a, c))| {
                    let e = (a - x).max(x - c).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Ball(b) => (dist(p, &b.center) - b.radius).max(0.0),
            _ => dist(p, &self.project(p)),
        }
    }

    /// Unchecked support function `sup_{y in S} <y, u>`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            ConvexSet::Box(b) => u
                .iter()
                .zip(b.lo.iter().zip(b.hi.iter()))
                .map(|(ui, (a, c))| (ui * a).max(ui * c))
                .sum(),
            ConvexSet::Ball(b) => dot(&b.center, u) + b.radius * norm(u),
            ConvexSet::HPolytope(h) => h.support(u),
            ConvexSet::VPolytope(v) => v.support(u),
            ConvexSet::Segment(s) => dot(&s.p, u).max(dot(&s.q, u)),
        }
    }

    /// Distance from `p` to the complement of the set: the largest `r` with
    /// `Ball{p, r}` inside. Zero outside, on the boundary, and everywhere for
    /// sets with empty interior.
    pub fn depth(&self, p: &[f64]) -> f64 {
        match self {
            ConvexSet::Box(b) => p
                .iter()
                .zip(b.lo.iter().zip(b.hi.iter()))
                .map(|(x, (a, c))| (x - a).min(c - x))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            ConvexSet::Ball(b) => (b.radius - dist(p, &b.center)).max(0.0),
            ConvexSet::HPolytope(h) => h.depth(p),
            ConvexSet::VPolytope(v) => v.depth(p),
            ConvexSet::Segment(s) => {
                if s.p.dim() == 1 {
                    let (a, c) = (s.p[0].min(s.q[0]), s.p[0].max(s.q[0]));
                    (p[0] - a).min(c - p[0]).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// `Ball{p, eta}` is contained in the set.
    pub fn interior_at_margin(&self, p: &[f64], eta: f64) -> bool {
        self.depth(p) >= eta
    }

    /// A reference point in the relative interior (vertex centroid for polytopes).
    pub fn center(&self) -> Point {
        match self {
            ConvexSet::Box(b) => b.center(),
            ConvexSet::Ball(b) => b.center.clone(),
            ConvexSet::HPolytope(h) => centroid(h.vertices()),
            ConvexSet::VPolytope(v) => centroid(v.vertices()),
            ConvexSet::Segment(s) => Point::new(blend(&s.p, &s.q, 0.5)),
        }
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        match self {
            ConvexSet::Box(b) => b.lo.iter().zip(b.hi.iter()).filter(|(a, c)| a < c).count(),
            ConvexSet::Ball(b) => {
                if b.radius > 0.0 {
                    b.center.dim()
                } else {
                    0
                }
            }
            ConvexSet::HPolytope(h) => polytope::affine_rank(h.vertices()),
            ConvexSet::VPolytope(v) => v.affine_rank(),
            ConvexSet::Segment(s) => usize::from(s.p != s.q),
        }
    }

    /// `sup{t >= 0 : c + t u in S}` for `c` in the set.
    pub fn ray_exit(&self, c: &[f64], u: &[f64]) -> f64 {
        match self {
            ConvexSet::Box(b) => u
                .iter()
                .enumerate()
                .filter_map(|(i, ui)| {
                    if *ui > 0.0 {
                        Some((b.hi[i] - c[i]) / ui)
                    } else if *ui < 0.0 {
                        Some((b.lo[i] - c[i]) / ui)
                    } else {
                        None
                    }
                })
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            ConvexSet::Ball(b) => {
                // |c - z + t u|^2 = r^2, z the center
                let w = sub(c, &b.center);
                let uu = dot(u, u);
                let wu = dot(&w, u);
                let disc = wu * wu - uu * (dot(&w, &w) - b.radius * b.radius);
                ((-wu + disc.max(0.0).sqrt()) / uu).max(0.0)
            }
            ConvexSet::HPolytope(h) => h.ray_exit(c, u),
            ConvexSet::VPolytope(v) => v.ray_exit(c, u),
            ConvexSet::Segment(s) => {
                // Only meaningful along the segment direction.
                let d = sub(&s.q, &s.p);
                let aligned = normalized(&d)
                    .zip(normalized(u))
                    .map(|(a, b)| (dot(&a, &b).abs() - 1.0).abs() < 1e-12)
                    .unwrap_or(false);
                if !aligned {
                    return 0.0;
                }
                let far = [&s.p, &s.q]
                    .into_iter()
                    .map(|e| dot(&sub(e, c), u) / dot(u, u))
                    .fold(0.0_f64, f64::max);
                far
            }
        }
    }

    /// Extreme points, or boundary probes for balls (`2k` axis points).
    pub fn extreme_points(&self) -> Vec<Point> {
        match self {
            ConvexSet::Box(b) => b.corners(),
            ConvexSet::Ball(b) => {
                let k = b.center.dim();
                if b.radius == 0.0 {
                    return vec![b.center.clone()];
                }
                let mut out = Vec::with_capacity(2 * k);
                for i in 0..k {
                    for s in [-1.0, 1.0] {
                        let mut p = b.center.clone().into_vec();
                        p[i] += s * b.radius;
                        out.push(Point::new(p));
                    }
                }
                out
            }
            ConvexSet::HPolytope(h) => h.vertices().to_vec(),
            ConvexSet::VPolytope(v) => v.vertices().to_vec(),
            ConvexSet::Segment(s) => {
                if s.p == s.q {
                    vec![s.p.clone()]
                } else {
                    vec![s.p.clone(), s.q.clone()]
                }
            }
        }
    }

    /// Boundary points in `directions` unit directions (balls) or the extreme
    /// points otherwise.
    pub fn boundary_probes(&self, directions: &[Vec<f64>]) -> Vec<Point> {
        match self {
            ConvexSet::Ball(b) if b.radius > 0.0 => directions
                .iter()
                .map(|u| Point::new(axpy(&b.center, b.radius, u)))
                .collect(),
            _ => self.extreme_points(),
        }
    }

    /// `sup_{y in self} d(y, other)`. Exact for polytopes, boxes and segments
    /// (the distance to a convex set is convex, so the sup is at a vertex);
    /// balls are probed along many boundary directions.
    pub fn excess_over_box(&self, other: &AxisBox) -> f64 {
        let target = ConvexSet::Box(other.clone());
        match self {
            ConvexSet::Box(b) => b.excess_over(other),
            ConvexSet::Ball(b) if b.radius > 0.0 => {
                let dirs = sphere_directions(b.center.dim(), 256);
                self.boundary_probes(&dirs)
                    .iter()
                    .chain(self.extreme_points().iter())
                    .map(|p| target.distance(p))
                    .fold(0.0, f64::max)
            }
            _ => self
                .extreme_points()
                .iter()
                .map(|p| target.distance(p))
                .fold(0.0, f64::max),
        }
    }

    /// Exact intersection with a box, where it stays in a supported representation.
    pub fn intersect_box(&self, bx: &AxisBox) -> Result<ConvexSet, GeometryError> {
        self.check_dim(bx.lo())?;
        match self {
            ConvexSet::Box(b) => {
                let lo: Vec<f64> =
                    b.lo.iter()
                        .zip(bx.lo.iter())
                        .map(|(a, c)| a.max(*c))
                        .collect();
                let hi: Vec<f64> =
                    b.hi.iter()
                        .zip(bx.hi.iter())
                        .map(|(a, c)| a.min(*c))
                        .collect();
                if lo.iter().zip(&hi).any(|(a, c)| a > c) {
                    return Err(GeometryError::EmptySet);
                }
                ConvexSet::boxed(lo, hi)
            }
            ConvexSet::Ball(b) => {
                if bx.contains(&b.center, 0.0) && self.excess_over_box(bx) <= 0.0 {
                    Ok(self.clone())
                } else {
                    Err(GeometryError::InvalidSet(
                        "ball clipped by a box is not representable".into(),
                    ))
                }
            }
            ConvexSet::HPolytope(h) => {
                let mut rows = h.rows().to_vec();
                rows.extend(bx.facet_rows());
                ConvexSet::hpolytope(rows)
            }
            ConvexSet::VPolytope(v) => match v.facets() {
                Some(f) => {
                    let mut rows = f.to_vec();
                    rows.extend(bx.facet_rows());
                    ConvexSet::hpolytope(rows)
                }
                None => Err(GeometryError::InvalidSet(
                    "lower-dimensional V-polytope clipped by a box is not representable".into(),
                )),
            },
            ConvexSet::Segment(s) => {
                // Liang-Barsky clipping of the parameter interval.
                let d = sub(&s.q, &s.p);
                let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
                for i in 0..d.len() {
                    if d[i] == 0.0 {
                        if s.p[i] < bx.lo[i] || s.p[i] > bx.hi[i] {
                            return Err(GeometryError::EmptySet);
                        }
                        continue;
                    }
                    let a = (bx.lo[i] - s.p[i]) / d[i];
                    let c = (bx.hi[i] - s.p[i]) / d[i];
                    t0 = t0.max(a.min(c));
                    t1 = t1.min(a.max(c));
                }
                if t0 > t1 {
                    return Err(GeometryError::EmptySet);
                }
                ConvexSet::segment(axpy(&s.p, t0, &d), axpy(&s.p, t1, &d))
            }
        }
    }
}

fn centroid(points: &[Point]) -> Point {
    let k = points.first().map_or(0, Point::dim);
    let mut c = vec![0.0; k];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p.iter()) {
            *ci += pi;
        }
    }
    let n = points.len().max(1) as f64;
    Point::new(c.into_iter().map(|x| x / n).collect())
}

/// Deterministic, well-spread unit directions in `R^k`, returned in antipodal
/// pairs. `k = 1` gives `±1`; `k = 2` evenly spaced angles offset by half a
/// step; higher `k` uses the axes followed by Halton points mapped to the sphere.
pub fn sphere_directions(k: usize, count: usize) -> Vec<Vec<f64>> {
    let half = count.div_ceil(2).max(1);
    let mut base: Vec<Vec<f64>> = Vec::with_capacity(half);
    match k {
        0 => return Vec::new(),
        1 => base.push(vec![1.0]),
        2 => {
            for j in 0..half {
                let th = std::f64::consts::PI * (j as f64 + 0.5) / half as f64;
                base.push(vec![th.cos(), th.sin()]);
            }
        }
        _ => {
            for i in 0..k.min(half) {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                base.push(e);
            }
            const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
            let mut idx = 1u64;
            while base.len() < half {
                let v: Vec<f64> = (0..k)
                    .map(|d| 2.0 * halton(idx, PRIMES[d % PRIMES.len()]) - 1.0)
                    .collect();
                idx += 1;
                if let Some(u) = normalized(&v) {
                    if norm(&v) > 0.2 {
                        base.push(u);
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(2 * base.len());
    for u in base {
        out.push(u.iter().map(|c| -c).collect());
        out.push(u);
    }
    out
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `inf_{y in S} |p - y|`.
pub fn distance_point_set(p: &[f64], set: &ConvexSet) -> Result<f64, GeometryError> {
    set.check_dim(p)?;
    Ok(set.distance(p))
}

/// `sup_{y in S} <y, u>`; `u` must be nonzero.
pub fn support_function(set: &ConvexSet, u: &[f64]) -> Result<f64, GeometryError> {
    set.check_dim(u)?;
    if norm(u) == 0.0 {
        return Err(GeometryError::ZeroDirection);
    }
    Ok(set.support(u))
}

/// The Minkowski sum `S + delta B` with `B` the closed unit ball.
#[derive(Clone, Copy, Debug)]
pub struct Inflation<'a> {
    pub set: &'a ConvexSet,
    pub delta: f64,
}

impl<'a> Inflation<'a> {
    pub fn new(set: &'a ConvexSet, delta: f64) -> Result<Self, GeometryError> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(GeometryError::OutOfRange {
                what: "inflation radius",
                value: delta,
            });
        }
        Ok(Self { set, delta })
    }

    /// `h_{S + dB}(u) = h_S(u) + d |u|`.
    pub fn support(&self, u: &[f64]) -> Result<f64, GeometryError> {
        Ok(support_function(self.set, u)? + self.delta * norm(u))
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> Result<bool, GeometryError> {
        Ok(distance_point_set(p, self.set)? <= self.delta + tol)
    }
}

/// How an inflation containment was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContainmentRoute {
    /// Facet normals of an H-polytope.
    FacetNormals,
    /// Closed form (ball, box, segment).
    ClosedForm,
    /// Edge normals of a planar V-polytope hull.
    EdgeNormals,
    /// Projection direction plus sampled unit directions.
    SampledDirections,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Containment {
    pub holds: bool,
    pub route: ContainmentRoute,
    pub directions_checked: usize,
}

/// Absolute tolerance used when comparing support values in containment tests.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Decides `a + delta B ⊆ A + delta B`.
///
/// In support-function terms the containment is
/// `<a,u> + delta|u| <= h_A(u) + delta|u|` for every direction `u`; the
/// `delta|u|` terms cancel, so it holds exactly when `a` lies in `A`. Each
/// route checks that cancelled inequality over a direction set that is
/// complete for the representation.
pub fn inflation_containment(
    a: &[f64],
    set: &ConvexSet,
    delta: f64,
    directions: usize,
) -> Result<Containment, GeometryError> {
    set.check_dim(a)?;
    if !(delta > 0.0) {
        return Err(GeometryError::NonPositive {
            what: "delta",
            value: delta,
        });
    }
    let tol = CONTAINMENT_TOL;
    let facet_test = |rows: &[HalfSpace], route| {
        let holds = rows.iter().all(|r| {
            let n = norm(&r.normal);
            dot(&r.normal, a) + delta * n <= r.offset + delta * n + tol * n
        });
        Containment {
            holds,
            route,
            directions_checked: rows.len(),
        }
    };
    Ok(match set {
        ConvexSet::HPolytope(h) => facet_test(h.rows(), ContainmentRoute::FacetNormals),
        ConvexSet::Box(b) => facet_test(&b.facet_rows(), ContainmentRoute::ClosedForm),
        ConvexSet::Ball(b) => Containment {
            // a + dB ⊆ B(c, r + d)  <=>  |a - c| + d <= r + d
            holds: dist(a, &b.center) + delta <= b.radius + delta + tol,
            route: ContainmentRoute::ClosedForm,
            directions_checked: 1,
        },
        ConvexSet::VPolytope(v) if v.dim() == 2 && v.facets().is_some() => facet_test(
            v.facets().unwrap_or_default(),
            ContainmentRoute::EdgeNormals,
        ),
        ConvexSet::Segment(_) => {
            let beta = set.project(a);
            let gap = dist(a, &beta);
            Containment {
                holds: projection_direction_holds(a, set, &beta, gap, delta, tol),
                route: ContainmentRoute::ClosedForm,
                directions_checked: 1,
            }
        }
        ConvexSet::VPolytope(_) => {
            let beta = set.project(a);
            let gap = dist(a, &beta);
            let mut checked = 1;
            let mut holds = projection_direction_holds(a, set, &beta, gap, delta, tol);
            if holds {
                for u in sphere_directions(set.dim(), directions) {
                    checked += 1;
                    if dot(a, &u) + delta > set.support(&u) + delta + tol {
                        holds = false;
                        break;
                    }
                }
            }
            Containment {
                holds,
                route: ContainmentRoute::SampledDirections,
                directions_checked: checked,
            }
        }
    })
}

/// Checks the support inequality along `u = a - beta` with `beta` the
/// projection of `a`. If `a` is outside, the point `a + delta u/|u|` of
/// `a + delta B` is at distance `delta + |a - beta|` from `A`, so this one
/// direction already refutes the containment.
fn projection_direction_holds(
    a: &[f64],
    set: &ConvexSet,
    beta: &[f64],
    gap: f64,
    delta: f64,
    tol: f64,
) -> bool {
    if gap <= tol {
        return true;
    }
    let u: Vec<f64> = sub(a, beta).iter().map(|c| c / gap).collect();
    dot(a, &u) + delta <= set.support(&u) + delta + tol
}

/// One-sided excess `max_{p in s1} min_{q in s2} |p - q|` of finite sets.
pub fn hausdorff_excess(s1: &[Point], s2: &[Point]) -> Result<f64, GeometryError> {
    if s1.is_empty() || s2.is_empty() {
        return Err(GeometryError::EmptySet);
    }
    let k = s1[0].dim();
    for p in s1.iter().chain(s2) {
        if p.dim() != k {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                found: p.dim(),
            });
        }
    }
    Ok(s1
        .iter()
        .map(|p| s2.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// `max_{p in points} d(p, set)`.
pub fn excess_over_set(points: &[Point], set: &ConvexSet) -> f64 {
    points.iter().map(|p| set.distance(p)).fold(0.0, f64::max)
}

/// `t * x1 + (1 - t) * x2` for `t` in `[0, 1]`.
pub fn segment_point(x1: &[f64], x2: &[f64], t: f64) -> Result<Point, GeometryError> {
    if x1.len() != x2.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: x1.len(),
            found: x2.len(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::OutOfRange {
            what: "segment parameter",
            value: t,
        });
    }
    Ok(Point::new(blend(x1, x2, t)))
}
