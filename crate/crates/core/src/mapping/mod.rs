//! Parametric set-valued maps `(x, lambda) -> T(x, lambda)` with convex values,
//! the grids they are evaluated on, and structural checks on their graphs.

mod graph;
mod probes;

pub use graph::{
    graph_convexity_check, graph_rotundity_check, graph_sample, ConvexityReport, ConvexityWitness,
    GraphColumn, GraphSample, GRAPH_MEMBER_TOL,
};
pub use probes::{
    joint_sequences, map_hlsc_probe, map_lsc_probe, map_usc_probe, range_containment_check,
    value_shape_check, RangeReport,
};

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, ExprError, SlotEnv};
use crate::geometry::{sphere_directions, AxisBox, ConvexSet, GeometryError, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("evaluation failed at x = {x}, parameter = {lambda}: {source}")]
    Eval {
        x: Point,
        lambda: Point,
        #[source]
        source: ExprError,
    },
    #[error("empty value at x = {x}, parameter = {lambda}: {detail}")]
    EmptyValue {
        x: Point,
        lambda: Point,
        detail: String,
    },
    #[error("variable `{0}` is not declared for this map")]
    UndeclaredVariable(String),
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A box `[lo, hi]` sampled at `lo + j h` per coordinate (the last point
/// clipped to `hi`), optionally restricted by `mask(x) >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    bx: AxisBox,
    h: f64,
    counts: Vec<usize>,
    mask: Option<Expr>,
}

impl GridDomain {
    pub fn new(lo: impl Into<Point>, hi: impl Into<Point>, h: f64) -> Result<Self, MapError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(MapError::Invalid(format!(
                "resolution must be positive, got {h}"
            )));
        }
        let bx = AxisBox::new(lo, hi)?;
        let counts: Vec<usize> = bx
            .lo()
            .iter()
            .zip(bx.hi().iter())
            .map(|(l, u)| ((u - l) / h - 1e-9).ceil().max(0.0) as usize + 1)
            .collect();
        Ok(Self {
            bx,
            h,
            counts,
            mask: None,
        })
    }

    /// Keeps grid points with `mask(x) >= 0`; the mask reads `x1..xN`.
    pub fn with_mask(mut self, mask: Expr) -> Result<Self, MapError> {
        let n = self.dim();
        mask.check_vars(|v| indexed(v, "x", n))
            .map_err(MapError::UndeclaredVariable)?;
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn bx(&self) -> &AxisBox {
        &self.bx
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.bx.dim()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn mask(&self) -> Option<&Expr> {
        self.mask.as_ref()
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        (self.bx.lo()[axis] + j as f64 * self.h).min(self.bx.hi()[axis])
    }

    pub fn admits(&self, x: &[f64]) -> bool {
        if !self.bx.contains(x, 0.0) {
            return false;
        }
        match &self.mask {
            None => true,
            Some(m) => m
                .eval(&SlotEnv::new(&[("x", x)]))
                .map(|v| v >= 0.0)
                .unwrap_or(false),
        }
    }

    /// Grid points with their multi-indices, in lexicographic order.
    pub fn indexed_points(&self) -> Vec<(Vec<usize>, Point)> {
        let k = self.dim();
        let total: usize = self.counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; k];
        for _ in 0..total {
            let p: Vec<f64> = (0..k).map(|a| self.coord(a, idx[a])).collect();
            if self.mask.is_none() || self.admits(&p) {
                out.push((idx.clone(), Point::new(p)));
            }
            for a in (0..k).rev() {
                idx[a] += 1;
                if idx[a] < self.counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    pub fn points(&self) -> Vec<Point> {
        self.indexed_points().into_iter().map(|(_, p)| p).collect()
    }

    /// Points at fractions `{1/4, 1/2, 3/4}` of every axis (not snapped to the grid).
    pub fn interior_quantiles(&self) -> Vec<Point> {
        let k = self.dim();
        let fr = [0.25, 0.5, 0.75];
        let total = fr.len().pow(k as u32);
        (0..total)
            .map(|mut c| {
                let mut p = vec![0.0; k];
                for a in (0..k).rev() {
                    let (l, u) = (self.bx.lo()[a], self.bx.hi()[a]);
                    p[a] = l + fr[c % fr.len()] * (u - l);
                    c /= fr.len();
                }
                Point::new(p)
            })
            .filter(|p| self.admits(p))
            .collect()
    }
}

pub(crate) fn indexed(name: &str, prefix: &str, n: usize) -> bool {
    name.strip_prefix(prefix)
        .and_then(|d| {
            (!d.starts_with('0'))
                .then(|| d.parse::<usize>().ok())
                .flatten()
        })
        .is_some_and(|i| (1..=n).contains(&i))
}

/// The shape of a map's values and the formulas producing them.
#[derive(Clone, Debug, PartialEq)]
pub enum MapFamily {
    /// `prod_i [lo_i, hi_i]`.
    IntervalBox {
        lo: Vec<Expr>,
        hi: Vec<Expr>,
    },
    Ball {
        center: Vec<Expr>,
        radius: Expr,
    },
    Constant(ConvexSet),
    /// The single point `g(x, lambda)`.
    Singleton(Vec<Expr>),
}

impl MapFamily {
    fn exprs(&self) -> Vec<&Expr> {
        match self {
            MapFamily::IntervalBox { lo, hi } => lo.iter().chain(hi).collect(),
            MapFamily::Ball { center, radius } => {
                center.iter().chain(std::iter::once(radius)).collect()
            }
            MapFamily::Constant(_) => Vec::new(),
            MapFamily::Singleton(g) => g.iter().collect(),
        }
    }

    pub fn value_dim(&self) -> usize {
        match self {
            MapFamily::IntervalBox { lo, .. } => lo.len(),
            MapFamily::Ball { center, .. } => center.len(),
            MapFamily::Constant(s) => s.dim(),
            MapFamily::Singleton(g) => g.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapFamily::IntervalBox { .. } => "box",
            MapFamily::Ball { .. } => "ball",
            MapFamily::Constant(_) => "constant",
            MapFamily::Singleton(_) => "singleton",
        }
    }
}

/// Anything that answers `T(x, lambda)` on a grid domain and parameter box.
pub trait SetValuedMap: Sync {
    fn domain(&self) -> &GridDomain;
    fn params(&self) -> &AxisBox;
    fn value(&self, x: &[f64], lambda: &[f64]) -> Result<ConvexSet, MapError>;

    fn arg_dim(&self) -> usize {
        self.domain().dim()
    }

    fn param_dim(&self) -> usize {
        self.params().dim()
    }
}

/// A map family declared by expressions over `{arg}1..{arg}N` and `{param}1..{param}P`.
#[derive(Clone, Debug, PartialEq)]
pub struct SetValuedMapDef {
    family: MapFamily,
    domain: GridDomain,
    params: AxisBox,
    clamp: bool,
    arg_prefix: String,
    param_prefix: String,
}

impl SetValuedMapDef {
    pub fn new(family: MapFamily, domain: GridDomain, params: AxisBox) -> Result<Self, MapError> {
        Self::with_prefixes(family, domain, params, "x", "l")
    }

    pub fn with_prefixes(
        family: MapFamily,
        domain: GridDomain,
        params: AxisBox,
        arg_prefix: &str,
        param_prefix: &str,
    ) -> Result<Self, MapError> {
        if arg_prefix == param_prefix {
            return Err(MapError::Invalid(
                "argument and parameter prefixes must differ".into(),
            ));
        }
        if let MapFamily::IntervalBox { lo, hi } = &family {
            if lo.len() != hi.len() || lo.is_empty() {
                return Err(MapError::Invalid(
                    "box bounds need one lo and one hi per coordinate".into(),
                ));
            }
        }
        if family.value_dim() != domain.dim() {
            return Err(MapError::Invalid(format!(
                "values live in R^{} but the domain is R^{}",
                family.value_dim(),
                domain.dim()
            )));
        }
        let (n, p) = (domain.dim(), params.dim());
        for e in family.exprs() {
            e.check_vars(|v| indexed(v, arg_prefix, n) || indexed(v, param_prefix, p))
                .map_err(MapError::UndeclaredVariable)?;
        }
        Ok(Self {
            family,
            domain,
            params,
            clamp: false,
            arg_prefix: arg_prefix.to_string(),
            param_prefix: param_prefix.to_string(),
        })
    }

    /// Intersect every value with the domain box.
    pub fn clamped(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn clamp(&self) -> bool {
        self.clamp
    }

    pub fn arg_prefix(&self) -> &str {
        &self.arg_prefix
    }

    pub fn param_prefix(&self) -> &str {
        &self.param_prefix
    }

    fn eval_all(&self, es: &[Expr], x: &[f64], lambda: &[f64]) -> Result<Vec<f64>, MapError> {
        let env = SlotEnv::new(&[
            (self.arg_prefix.as_str(), x),
            (self.param_prefix.as_str(), lambda),
        ]);
        es.iter()
            .map(|e| {
                e.eval(&env).map_err(|source| MapError::Eval {
                    x: Point::from(x),
                    lambda: Point::from(lambda),
                    source,
                })
            })
            .collect()
    }
}

impl SetValuedMap for SetValuedMapDef {
    fn domain(&self) -> &GridDomain {
        &self.domain
    }

    fn params(&self) -> &AxisBox {
        &self.params
    }

    fn value(&self, x: &[f64], lambda: &[f64]) -> Result<ConvexSet, MapError> {
        let empty = |detail: String| MapError::EmptyValue {
            x: Point::from(x),
            lambda: Point::from(lambda),
            detail,
        };
        let set = match &self.family {
            MapFamily::IntervalBox { lo, hi } => {
                let lo = self.eval_all(lo, x, lambda)?;
                let hi = self.eval_all(hi, x, lambda)?;
                if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
                    return Err(empty(format!(
                        "lo_{} = {} > hi_{} = {}",
                        i + 1,
                        lo[i],
                        i + 1,
                        hi[i]
                    )));
                }
                ConvexSet::boxed(lo, hi)?
            }
            MapFamily::Ball { center, radius } => {
                let c = self.eval_all(center, x, lambda)?;
                let r = self.eval_all(std::slice::from_ref(radius), x, lambda)?[0];
                if r < 0.0 {
                    return Err(empty(format!("radius {r} < 0")));
                }
                ConvexSet::ball(c, r)?
            }
            MapFamily::Constant(s) => s.clone(),
            MapFamily::Singleton(g) => ConvexSet::singleton(self.eval_all(g, x, lambda)?)?,
        };
        if !self.clamp {
            return Ok(set);
        }
        set.intersect_box(self.domain.bx()).map_err(|e| match e {
            GeometryError::EmptySet => empty("value misses the domain box".into()),
            other => MapError::Geometry(other),
        })
    }
}

impl fmt::Display for SetValuedMapDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |es: &[Expr]| {
            es.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        match &self.family {
            MapFamily::IntervalBox { lo, hi } => {
                write!(f, "box[lo = ({}), hi = ({})]", join(lo), join(hi))
            }
            MapFamily::Ball { center, radius } => {
                write!(f, "ball[center = ({}), radius = {radius}]", join(center))
            }
            MapFamily::Constant(s) => write!(f, "constant[{s:?}]"),
            MapFamily::Singleton(g) => write!(f, "singleton[({})]", join(g)),
        }
    }
}

/// Boundary and interior sample points of a value set.
///
/// Boxes give their corners, balls `boundary_dirs` boundary points; interior
/// points are `per` blends from the center towards the boundary samples (for
/// intervals, evenly spaced points).
pub fn set_samples(set: &ConvexSet, boundary_dirs: usize, per: usize) -> (Vec<Point>, Vec<Point>) {
    let k = set.dim();
    let boundary = match set {
        ConvexSet::Ball(_) => set.boundary_probes(&sphere_directions(k, boundary_dirs.max(2 * k))),
        _ => dedup(set.extreme_points()),
    };
    let mut interior = Vec::with_capacity(per);
    if let ([a, b], 1) = (boundary.as_slice(), k) {
        for j in 0..per {
            let t = (j + 1) as f64 / (per + 1) as f64;
            interior.push(Point::new(vec![a[0] + t * (b[0] - a[0])]));
        }
    } else if boundary.len() > 1 {
        let c = set.center();
        for j in 0..per {
            let t = (j + 1) as f64 / (per + 1) as f64;
            let e = &boundary[j % boundary.len()];
            interior.push(Point::new(crate::geometry::blend(e, &c, t)));
        }
    }
    (boundary, interior)
}

fn dedup(mut pts: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.drain(..) {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::example31;
    use super::*;
    use crate::expr::parse;
    use approx::assert_abs_diff_eq;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn grid_points_are_lo_plus_jh_clipped() {
        let g = GridDomain::new([0.0], [1.0], 0.3).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        let g = GridDomain::new([0.0], [2.0], 1e-3).unwrap();
        assert_eq!(g.points().len(), 2001);
        let g = GridDomain::new([0.0, 0.0], [1.0, 1.0], 0.5).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 9);
        assert!(pts.windows(2).all(|w| w[0].coords() < w[1].coords()));
        assert!(GridDomain::new([0.0], [1.0], 0.0).is_err());
    }

    #[test]
    fn mask_filters_points() {
        let g = GridDomain::new([0.0, 0.0], [1.0, 1.0], 0.5)
            .unwrap()
            .with_mask(e("1 - x1 - x2"))
            .unwrap();
        assert_eq!(g.points().len(), 6);
        assert!(GridDomain::new([0.0], [1.0], 0.5)
            .unwrap()
            .with_mask(e("x2"))
            .is_err());
    }

    #[test]
    fn example31_value_at_one() {
        let t = example31("2*x1 - x1^2", 0.01);
        let v = t.value(&[1.0], &[0.0]).unwrap();
        assert_eq!(v, ConvexSet::boxed([0.0], [2.0]).unwrap());
        let v0 = t.value(&[0.0], &[0.0]).unwrap();
        assert_eq!(v0, ConvexSet::boxed([1.0], [1.0]).unwrap());
    }

    #[test]
    fn constant_and_singleton_values() {
        let dom = GridDomain::new([0.0, 0.0], [2.0, 2.0], 0.1).unwrap();
        let ball = ConvexSet::ball([0.0, 0.0], 1.0).unwrap();
        let t = SetValuedMapDef::new(
            MapFamily::Constant(ball.clone()),
            dom,
            AxisBox::new([0.0], [1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(t.value(&[0.3, 1.7], &[0.9]).unwrap(), ball);

        let dom = GridDomain::new([0.0], [1.0], 0.1).unwrap();
        let s = SetValuedMapDef::new(
            MapFamily::Singleton(vec![e("min(x1 + l1, 1)")]),
            dom,
            AxisBox::new([0.0], [1.0]).unwrap(),
        )
        .unwrap();
        let v = s.value(&[0.5], &[0.2]).unwrap();
        assert_abs_diff_eq!(v.center()[0], 0.7, epsilon = 1e-15);
        assert_eq!(v.affine_dim(), 0);
    }

    #[test]
    fn undeclared_variables_and_empty_values_are_reported() {
        let dom = GridDomain::new([0.0], [1.0], 0.1).unwrap();
        let pb = AxisBox::new([0.0], [1.0]).unwrap();
        let err = SetValuedMapDef::new(
            MapFamily::Singleton(vec![e("x1 + u3")]),
            dom.clone(),
            pb.clone(),
        );
        assert_eq!(err.unwrap_err(), MapError::UndeclaredVariable("u3".into()));
        let err =
            SetValuedMapDef::new(MapFamily::Singleton(vec![e("x2")]), dom.clone(), pb.clone());
        assert!(matches!(err, Err(MapError::UndeclaredVariable(_))));
        let inv = SetValuedMapDef::new(
            MapFamily::IntervalBox {
                lo: vec![e("x1 + 1")],
                hi: vec![e("x1")],
            },
            dom.clone(),
            pb.clone(),
        )
        .unwrap();
        assert!(matches!(
            inv.value(&[0.5], &[0.0]),
            Err(MapError::EmptyValue { .. })
        ));
        let bad =
            SetValuedMapDef::new(MapFamily::Singleton(vec![e("sqrt(x1 - 2)")]), dom, pb).unwrap();
        match bad.value(&[0.5], &[0.0]) {
            Err(MapError::Eval { x, .. }) => assert_eq!(x[0], 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clamping_intersects_with_the_domain() {
        let t = example31("x1^2 + 2*x1", 0.01).clamped(true);
        let v = t.value(&[2.0], &[0.0]).unwrap();
        assert_eq!(v, ConvexSet::boxed([0.0], [2.0]).unwrap());
    }

    #[test]
    fn samples_cover_boundary_and_interior() {
        let (b, i) = set_samples(&ConvexSet::boxed([0.0], [2.0]).unwrap(), 8, 3);
        assert_eq!(b.len(), 2);
        assert_eq!(
            i.iter().map(|p| p[0]).collect::<Vec<_>>(),
            vec![0.5, 1.0, 1.5]
        );
        let (b, _) = set_samples(&ConvexSet::boxed([1.0], [1.0]).unwrap(), 8, 3);
        assert_eq!(b.len(), 1);
        let disk = ConvexSet::ball([0.0, 0.0], 1.0).unwrap();
        let (b, i) = set_samples(&disk, 8, 4);
        assert_eq!(b.len(), 8);
        assert!(b
            .iter()
            .all(|p| (crate::geometry::norm(p) - 1.0).abs() < 1e-12));
        assert!(i.iter().all(|p| disk.depth(p) > 0.0));
    }
}
