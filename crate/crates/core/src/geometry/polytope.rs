//! Polytopes in low dimension (k <= 4).
//!
//! Both representations answer queries by finite enumeration: vertices of an
//! H-polytope come from k-subsets of rows, facets of a V-polytope from
//! k-subsets of vertices, and projections from enumerating the faces whose
//! affine hull contains the nearest point. This is exact (up to rounding) and
//! cheap at the sizes used here.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use super::point::{dist, dot, norm, Point};
use super::GeometryError;

/// Highest dimension for which polytope enumeration is supported.
pub const MAX_POLYTOPE_DIM: usize = 4;

const FEAS_TOL: f64 = 1e-9;

/// Closed half-space `normal · x <= offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: Point,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: impl Into<Point>, offset: f64) -> Self {
        Self {
            normal: normal.into(),
            offset,
        }
    }

    #[inline]
    pub fn slack(&self, p: &[f64]) -> f64 {
        self.offset - dot(&self.normal, p)
    }

    #[inline]
    fn satisfied(&self, p: &[f64]) -> bool {
        self.slack(p) >= -FEAS_TOL * (1.0 + self.offset.abs())
    }
}

/// Bounded polytope given by half-spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    rows: Vec<HalfSpace>,
    vertices: Vec<Point>,
    dim: usize,
}

impl HPolytope {
    /// Validates the rows, enumerates vertices and rejects empty or unbounded
    /// systems.
    pub fn new(rows: Vec<HalfSpace>) -> Result<Self, GeometryError> {
        let first = rows
            .first()
            .ok_or_else(|| GeometryError::InvalidSet("H-polytope needs at least one row".into()))?;
        let dim = first.normal.dim();
        check_poly_dim(dim)?;
        for r in &rows {
            if r.normal.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: r.normal.dim(),
                });
            }
            if !r.normal.is_finite() || !r.offset.is_finite() || norm(&r.normal) == 0.0 {
                return Err(GeometryError::InvalidSet(
                    "H-polytope rows need finite, nonzero normals".into(),
                ));
            }
        }
        let unit: Vec<Point> = rows
            .iter()
            .map(|r| {
                let n = norm(&r.normal);
                Point::new(r.normal.iter().map(|c| c / n).collect())
            })
            .collect();
        if !positively_spanning(&unit, dim) {
            return Err(GeometryError::InvalidSet("H-polytope is unbounded".into()));
        }
        let vertices = enumerate_vertices(&rows, dim);
        if vertices.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        Ok(Self {
            rows,
            vertices,
            dim,
        })
    }

    pub fn rows(&self) -> &[HalfSpace] {
        &self.rows
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.slack(p) >= -tol * norm(&r.normal))
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean distance from `p` to the complement (0 outside or on the boundary).
    pub fn depth(&self, p: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.slack(p) / norm(&r.normal))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Nearest point by active-set enumeration.
    ///
    /// The projection lies on the affine hull of its active face, so the
    /// feasible candidate closest to `p` among all row subsets of size `<= k`
    /// is the projection.
    pub fn project(&self, p: &[f64]) -> Point {
        if self.rows.iter().all(|r| r.satisfied(p)) {
            return Point::from(p);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for size in 1..=self.dim.min(self.rows.len()) {
            for subset in (0..self.rows.len()).combinations(size) {
                let Some(x) = project_onto_flat(&self.rows, &subset, p) else {
                    continue;
                };
                if !self.rows.iter().all(|r| r.satisfied(&x)) {
                    continue;
                }
                let d = dist(&x, p);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, x));
                }
            }
        }
        match best {
            Some((_, x)) => Point::new(x),
            // Unreachable for a nonempty polytope; fall back to the nearest vertex.
            None => nearest_of(&self.vertices, p),
        }
    }

    pub fn ray_exit(&self, c: &[f64], u: &[f64]) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| {
                let nu = dot(&r.normal, u);
                (nu > 0.0).then(|| r.slack(c) / nu)
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

/// Convex hull of finitely many points.
#[derive(Clone, Debug, PartialEq)]
pub struct VPolytope {
    vertices: Vec<Point>,
    facets: Option<Vec<HalfSpace>>,
    dim: usize,
}

impl VPolytope {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let first = vertices.first().ok_or_else(|| {
            GeometryError::InvalidSet("V-polytope needs at least one vertex".into())
        })?;
        let dim = first.dim();
        check_poly_dim(dim)?;
        for v in &vertices {
            if v.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            if !v.is_finite() {
                return Err(GeometryError::InvalidSet("non-finite vertex".into()));
            }
        }
        let facets = hull_facets(&vertices, dim);
        Ok(Self {
            vertices,
            facets,
            dim,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Facet H-representation; `None` when the hull is lower dimensional.
    pub fn facets(&self) -> Option<&[HalfSpace]> {
        self.facets.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn affine_rank(&self) -> usize {
        affine_rank(&self.vertices)
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn depth(&self, p: &[f64]) -> f64 {
        match &self.facets {
            Some(f) => f
                .iter()
                .map(|h| h.slack(p))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            None => 0.0,
        }
    }

    pub fn ray_exit(&self, c: &[f64], u: &[f64]) -> f64 {
        match &self.facets {
            Some(f) => f
                .iter()
                .filter_map(|h| {
                    let nu = dot(&h.normal, u);
                    (nu > 0.0).then(|| h.slack(c) / nu)
                })
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            None => 0.0,
        }
    }

    /// Nearest point by enumerating vertex simplices.
    ///
    /// By Caratheodory the projection lies in some simplex spanned by at most
    /// `k + 1` vertices, and its projection onto that simplex's affine hull has
    /// nonnegative barycentric coordinates.
    pub fn project(&self, p: &[f64]) -> Point {
        if let Some(f) = &self.facets {
            if f.iter().all(|h| h.satisfied(p)) {
                return Point::from(p);
            }
        }
        let n = self.vertices.len();
        let mut best = nearest_of(&self.vertices, p).into_vec();
        let mut best_d = dist(&best, p);
        for size in 2..=(self.dim + 1).min(n) {
            for subset in (0..n).combinations(size) {
                let Some(x) = project_onto_simplex_hull(&self.vertices, &subset, p) else {
                    continue;
                };
                let d = dist(&x, p);
                if d < best_d {
                    best_d = d;
                    best = x;
                }
            }
        }
        Point::new(best)
    }
}

fn check_poly_dim(dim: usize) -> Result<(), GeometryError> {
    if dim == 0 || dim > MAX_POLYTOPE_DIM {
        return Err(GeometryError::InvalidSet(format!(
            "polytopes are supported for 1 <= k <= {MAX_POLYTOPE_DIM}, got k = {dim}"
        )));
    }
    Ok(())
}

pub(crate) fn nearest_of(points: &[Point], p: &[f64]) -> Point {
    points
        .iter()
        .min_by(|a, b| dist(a, p).total_cmp(&dist(b, p)))
        .cloned()
        .unwrap_or_default()
}

/// Solves a square or least-squares system when it is well conditioned.
fn solve_regular(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-12 * smax {
        return None;
    }
    svd.solve(&b, 0.0).ok()
}

/// Numerical rank of `rows` (each a vector of length `cols`).
pub(crate) fn matrix_rank(rows: &[Vec<f64>], cols: usize) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|s| **s > 1e-10 * smax.max(1.0))
        .count()
}

pub(crate) fn affine_rank(points: &[Point]) -> usize {
    let Some(p0) = points.first() else { return 0 };
    let diffs: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0.iter()).map(|(a, b)| a - b).collect())
        .collect();
    matrix_rank(&diffs, p0.dim())
}

/// Projection of `p` onto `{x : n_i · x = b_i, i in subset}`.
fn project_onto_flat(rows: &[HalfSpace], subset: &[usize], p: &[f64]) -> Option<Vec<f64>> {
    let m = subset.len();
    let k = p.len();
    let n = DMatrix::from_fn(m, k, |i, j| rows[subset[i]].normal[j]);
    let resid = DVector::from_fn(m, |i, _| {
        dot(&rows[subset[i]].normal, p) - rows[subset[i]].offset
    });
    let gram = &n * n.transpose();
    let mult = solve_regular(gram, resid)?;
    let shift = n.transpose() * mult;
    Some(p.iter().enumerate().map(|(j, x)| x - shift[j]).collect())
}

/// Projection of `p` onto the affine hull of the chosen vertices, accepted
/// only when it lies inside their simplex.
fn project_onto_simplex_hull(vertices: &[Point], subset: &[usize], p: &[f64]) -> Option<Vec<f64>> {
    let v0 = &vertices[subset[0]];
    let k = v0.dim();
    let m = subset.len() - 1;
    let d = DMatrix::from_fn(k, m, |i, j| vertices[subset[j + 1]][i] - v0[i]);
    let rhs = DVector::from_fn(k, |i, _| p[i] - v0[i]);
    let gram = d.transpose() * &d;
    let coef = solve_regular(gram, d.transpose() * rhs)?;
    let total: f64 = coef.iter().sum();
    if coef.iter().any(|c| *c < -1e-12) || total > 1.0 + 1e-12 {
        return None;
    }
    let x = &d * coef;
    Some((0..k).map(|i| v0[i] + x[i]).collect())
}

fn enumerate_vertices(rows: &[HalfSpace], dim: usize) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for subset in (0..rows.len()).combinations(dim) {
        let a = DMatrix::from_fn(dim, dim, |i, j| rows[subset[i]].normal[j]);
        let b = DVector::from_fn(dim, |i, _| rows[subset[i]].offset);
        let Some(x) = solve_regular(a, b) else {
            continue;
        };
        let x: Vec<f64> = x.iter().copied().collect();
        if !rows.iter().all(|r| r.satisfied(&x)) {
            continue;
        }
        if out.iter().all(|v| dist(v, &x) > 1e-9) {
            out.push(Point::new(x));
        }
    }
    out
}

/// Generalized cross product of `k - 1` vectors in `R^k`.
fn orthogonal_complement(diffs: &[Vec<f64>], k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k)
        .map(|col| {
            let minor = DMatrix::from_fn(k - 1, k - 1, |i, j| {
                let jj = if j < col { j } else { j + 1 };
                diffs[i][jj]
            });
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect()
}

fn hull_facets(vertices: &[Point], dim: usize) -> Option<Vec<HalfSpace>> {
    if affine_rank(vertices) < dim {
        return None;
    }
    if dim == 1 {
        let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = vertices
            .iter()
            .map(|v| v[0])
            .fold(f64::NEG_INFINITY, f64::max);
        return Some(vec![HalfSpace::new([1.0], hi), HalfSpace::new([-1.0], -lo)]);
    }
    let scale = vertices.iter().map(|v| norm(v)).fold(1.0_f64, f64::max);
    let tol = 1e-9 * scale;
    let mut facets: Vec<HalfSpace> = Vec::new();
    for subset in (0..vertices.len()).combinations(dim) {
        let v0 = &vertices[subset[0]];
        let diffs: Vec<Vec<f64>> = subset[1..]
            .iter()
            .map(|&i| {
                vertices[i]
                    .iter()
                    .zip(v0.iter())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let raw = orthogonal_complement(&diffs, dim);
        let len = norm(&raw);
        if len <= 1e-12 * scale.powi(dim as i32 - 1) {
            continue;
        }
        let mut normal: Vec<f64> = raw.iter().map(|c| c / len).collect();
        let mut offset = dot(&normal, v0);
        let sides: Vec<f64> = vertices.iter().map(|v| dot(&normal, v) - offset).collect();
        let above = sides.iter().any(|s| *s > tol);
        let below = sides.iter().any(|s| *s < -tol);
        if above && below {
            continue;
        }
        if above {
            normal.iter_mut().for_each(|c| *c = -*c);
            offset = -offset;
        }
        let dup = facets
            .iter()
            .any(|f| dist(&f.normal, &normal) < 1e-9 && (f.offset - offset).abs() < tol);
        if !dup {
            facets.push(HalfSpace::new(normal, offset));
        }
    }
    Some(facets)
}

/// True when the cone generated by `unit_normals` is all of `R^dim`, i.e. the
/// origin is interior to their convex hull. That is exactly boundedness of the
/// corresponding H-polytope.
fn positively_spanning(unit_normals: &[Point], dim: usize) -> bool {
    if unit_normals.len() < dim + 1 {
        return false;
    }
    match hull_facets(unit_normals, dim) {
        Some(f) => f.iter().all(|h| h.offset > 1e-9),
        None => false,
    }
}
