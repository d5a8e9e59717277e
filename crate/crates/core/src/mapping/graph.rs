//! Sampled graphs `{(x, y) : y in T(x, lambda0)}` and their convexity and
//! rotundity checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{set_samples, GridDomain, MapError, SetValuedMap};
use crate::certificate::Verdict;
use crate::geometry::{
    blend, dist, normalized, pair_threshold, Point, RotundWitness, Rotundity, RotundityVerdict,
    PAIR_PROBES,
};

/// Graph membership tolerance used by the rotundity probes.
pub const GRAPH_MEMBER_TOL: f64 = 1e-12;

const MAX_RANDOM_PAIRS: usize = 4000;
const BALL_BOUNDARY_DIRS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphColumn {
    pub x: Point,
    pub boundary: Vec<Point>,
    pub interior: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub lambda0: Point,
    pub per_x: usize,
    pub columns: Vec<GraphColumn>,
}

impl GraphSample {
    pub fn arg_dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.x.dim())
    }

    /// All sampled `(x, y)` points, boundary samples first within each column.
    pub fn points(&self) -> Vec<Point> {
        self.columns
            .iter()
            .flat_map(|c| {
                c.boundary
                    .iter()
                    .chain(&c.interior)
                    .map(move |y| join(&c.x, y))
            })
            .collect()
    }

    fn boundary_points(&self) -> Vec<(usize, Point)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.boundary.iter().map(move |y| (j, join(&c.x, y))))
            .collect()
    }

    /// Largest `d(y, T(x, lambda0))` over the stored samples.
    pub fn max_membership_error(&self, map: &dyn SetValuedMap) -> Result<f64, MapError> {
        let mut worst = 0.0f64;
        for c in &self.columns {
            let v = map.value(&c.x, &self.lambda0)?;
            for y in c.boundary.iter().chain(&c.interior) {
                worst = worst.max(v.distance(y));
            }
        }
        Ok(worst)
    }
}

fn join(x: &[f64], y: &[f64]) -> Point {
    let mut v = Vec::with_capacity(x.len() + y.len());
    v.extend_from_slice(x);
    v.extend_from_slice(y);
    Point::new(v)
}

/// Samples `T(x, lambda0)` at every point of `grid`: the value's extreme
/// points (boundary probes for balls) and `per_x` interior points.
pub fn graph_sample(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    grid: &GridDomain,
    per_x: usize,
) -> Result<GraphSample, MapError> {
    if per_x < 2 {
        return Err(MapError::Invalid(format!(
            "per_x must be at least 2, got {per_x}"
        )));
    }
    let columns = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let v = map.value(&x, lambda0)?;
            let (boundary, interior) = set_samples(&v, BALL_BOUNDARY_DIRS, per_x);
            Ok(GraphColumn {
                x,
                boundary,
                interior,
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    Ok(GraphSample {
        lambda0: Point::from(lambda0),
        per_x,
        columns,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityWitness {
    pub a: Point,
    pub b: Point,
    pub t: f64,
    /// `d(y_t, T(x_t, lambda0))` at the blended point.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub verdict: Verdict,
    pub witness: Option<ConvexityWitness>,
    pub pairs_checked: usize,
}

fn sample_pairs(n: usize, max_random: usize, seed: u64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    if n * (n - 1) / 2 <= max_random {
        return (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..max_random)
        .map(|_| {
            let ij = sample(&mut rng, n, 2);
            (ij.index(0).min(ij.index(1)), ij.index(0).max(ij.index(1)))
        })
        .collect()
}

/// Checks `t (x1,y1) + (1-t) (x2,y2)` against the graph for sampled pairs,
/// `t` in the order `1/2, 1/4, 3/4`. Pairs between the first and last columns
/// are always included.
pub fn graph_convexity_check(
    map: &dyn SetValuedMap,
    gs: &GraphSample,
    tol: f64,
    seed: u64,
) -> Result<ConvexityReport, MapError> {
    let n = gs.arg_dim();
    let pts = gs.points();
    let mut pairs = Vec::new();
    if let (Some(first), Some(last)) = (gs.columns.first(), gs.columns.last()) {
        let start_last = pts.len() - last.boundary.len() - last.interior.len();
        for a in 0..first.boundary.len() {
            for b in 0..last.boundary.len() {
                pairs.push((a, start_last + b));
            }
        }
    }
    pairs.extend(sample_pairs(pts.len(), MAX_RANDOM_PAIRS, seed));
    let results: Vec<Option<ConvexityWitness>> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<Option<ConvexityWitness>, MapError> {
            for t in [0.5, 0.25, 0.75] {
                let z = blend(&pts[i], &pts[j], t);
                let v = map.value(&z[..n], &gs.lambda0)?;
                let d = v.distance(&z[n..]);
                if d > tol {
                    return Ok(Some(ConvexityWitness {
                        a: pts[i].clone(),
                        b: pts[j].clone(),
                        t,
                        distance: d,
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_, _>>()?;
    let witness = results.into_iter().flatten().next();
    Ok(ConvexityReport {
        verdict: if witness.is_some() {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
        witness,
        pairs_checked: pairs.len(),
    })
}

struct GraphOracle<'a> {
    map: &'a dyn SetValuedMap,
    lambda0: &'a [f64],
    n: usize,
    dirs: Vec<Vec<f64>>,
}

impl GraphOracle<'_> {
    fn member(&self, z: &[f64]) -> bool {
        let x = &z[..self.n];
        self.map.domain().admits(x)
            && self
                .map
                .value(x, self.lambda0)
                .map(|v| v.distance(&z[self.n..]) <= GRAPH_MEMBER_TOL)
                .unwrap_or(false)
    }

    /// `z` and every probe `z + m d` lie in the graph.
    fn interior(&self, z: &[f64], m: f64) -> bool {
        self.member(z)
            && self
                .dirs
                .iter()
                .all(|d| self.member(&z.iter().zip(d).map(|(a, b)| a + m * b).collect::<Vec<_>>()))
    }
}

fn probe_directions(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(2 * dim + 8);
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < 2 * dim + 8 {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some(u) = normalized(&v) {
            dirs.push(u);
        }
    }
    dirs
}

/// Rotundity of the sampled graph in `R^{N+N}`.
///
/// Boundary samples are the value extremes of each column. Pairs come from
/// adjacent columns plus up to 4000 seeded random pairs, restricted to
/// distinct `x` and length at least `eta`. A pair passes when one of the
/// probe points on its open segment is interior at the margin
/// `eta (len / diam)^2 / 2`, interiority being checked with `2(N+N)` axis
/// probes and 8 random directions.
pub fn graph_rotundity_check(
    map: &dyn SetValuedMap,
    gs: &GraphSample,
    eta: f64,
    seed: u64,
) -> Result<RotundityVerdict, MapError> {
    if !(eta > 0.0) {
        return Err(MapError::Invalid(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let n = gs.arg_dim();
    let bpts = gs.boundary_points();
    let dim = bpts.first().map_or(0, |(_, p)| p.dim());
    let inconclusive = RotundityVerdict {
        verdict: Rotundity::Inconclusive,
        witness: None,
        samples_used: 0,
        margin: eta,
    };
    if bpts.len() < 2 {
        return Ok(inconclusive);
    }
    let mut lo = bpts[0].1.clone().into_vec();
    let mut hi = lo.clone();
    for (_, p) in &bpts {
        for i in 0..dim {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let diam = dist(&lo, &hi);

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut start = vec![0usize; gs.columns.len() + 1];
    for (j, c) in gs.columns.iter().enumerate() {
        start[j + 1] = start[j] + c.boundary.len();
    }
    for j in 0..gs.columns.len().saturating_sub(1) {
        let (a, b) = (
            gs.columns[j].boundary.len(),
            gs.columns[j + 1].boundary.len(),
        );
        for s in 0..a.min(b) {
            pairs.push((start[j] + s, start[j + 1] + s));
        }
    }
    pairs.extend(sample_pairs(
        bpts.len(),
        MAX_RANDOM_PAIRS,
        seed ^ 0x9e37_79b9,
    ));
    pairs.retain(|&(i, j)| {
        let (p, q) = (&bpts[i].1, &bpts[j].1);
        dist(&p[..n], &q[..n]) > 0.0 && dist(p, q) >= eta
    });
    if pairs.is_empty() {
        return Ok(inconclusive);
    }

    let oracle = GraphOracle {
        map,
        lambda0: &gs.lambda0,
        n,
        dirs: probe_directions(dim, seed),
    };
    let results: Vec<Option<RotundWitness>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (p, q) = (&bpts[i].1, &bpts[j].1);
            let m = pair_threshold(eta, dist(p, q), diam);
            let ok = PAIR_PROBES
                .iter()
                .any(|&t| oracle.interior(&blend(p, q, t), m));
            (!ok).then(|| RotundWitness {
                p: p.clone(),
                q: q.clone(),
                midpoint_margin: m,
            })
        })
        .collect();
    let used = pairs.len();
    Ok(match results.into_iter().flatten().next() {
        Some(w) => RotundityVerdict {
            verdict: Rotundity::NotRotund,
            witness: Some(w),
            samples_used: used,
            margin: eta,
        },
        None => RotundityVerdict {
            verdict: Rotundity::Rotund,
            witness: None,
            samples_used: used,
            margin: eta,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{AxisBox, ConvexSet};
    use crate::mapping::fixtures::example31;
    use crate::mapping::{MapFamily, SetValuedMapDef};

    fn unit_map(family: MapFamily) -> SetValuedMapDef {
        let dom = GridDomain::new([0.0], [1.0], 0.01).unwrap();
        SetValuedMapDef::new(family, dom, AxisBox::new([0.0], [1.0]).unwrap()).unwrap()
    }

    #[test]
    fn disk_graph_samples_lie_in_the_disk() {
        let t = example31("2*x1 - x1^2", 0.01);
        let gs = graph_sample(&t, &[0.0], t.domain(), 3).unwrap();
        for p in gs.points() {
            assert!(
                (p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2) <= 1.0 + 1e-9,
                "{p}"
            );
        }
        assert!(gs.max_membership_error(&t).unwrap() <= 1e-12);
        assert!(graph_sample(&t, &[0.0], t.domain(), 1).is_err());
    }

    #[test]
    fn constant_box_samples_fill_the_square_and_diagonal_stays_on_it() {
        let sq = unit_map(MapFamily::Constant(ConvexSet::boxed([0.0], [1.0]).unwrap()));
        let gs = graph_sample(&sq, &[0.0], sq.domain(), 4).unwrap();
        let pts = gs.points();
        assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p[1])));
        assert!(pts.iter().any(|p| p[1] == 0.0) && pts.iter().any(|p| p[1] == 1.0));
        let diag = unit_map(MapFamily::Singleton(vec![parse("x1").unwrap()]));
        let gs = graph_sample(&diag, &[0.0], diag.domain(), 2).unwrap();
        assert!(gs.points().iter().all(|p| (p[0] - p[1]).abs() < 1e-15));
    }

    #[test]
    fn convexity_verdicts() {
        let t = example31("2*x1 - x1^2", 0.01);
        let gs = graph_sample(&t, &[0.0], t.domain(), 3).unwrap();
        assert_eq!(
            graph_convexity_check(&t, &gs, 1e-9, 1).unwrap().verdict,
            Verdict::Pass
        );

        let par = unit_map(MapFamily::IntervalBox {
            lo: vec![parse("x1^2").unwrap()],
            hi: vec![parse("x1^2").unwrap()],
        });
        let gs = graph_sample(&par, &[0.0], par.domain(), 2).unwrap();
        let r = graph_convexity_check(&par, &gs, 1e-9, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.t, 0.5);
        // first pair is (0,0)-(1,1): midpoint (0.5, 0.5) against T(0.5) = {0.25}
        assert!((w.distance - 0.25).abs() < 1e-12);

        let sq = unit_map(MapFamily::Constant(ConvexSet::boxed([0.0], [1.0]).unwrap()));
        let gs = graph_sample(&sq, &[0.0], sq.domain(), 3).unwrap();
        assert_eq!(
            graph_convexity_check(&sq, &gs, 1e-9, 1).unwrap().verdict,
            Verdict::Pass
        );
    }

    #[test]
    fn rotundity_verdicts() {
        let t = example31("2*x1 - x1^2", 0.01);
        let gs = graph_sample(&t, &[0.0], t.domain(), 3).unwrap();
        let v = graph_rotundity_check(&t, &gs, 1e-3, 5).unwrap();
        assert_eq!(v.verdict, Rotundity::Rotund, "{v:?}");

        let diag = unit_map(MapFamily::Singleton(vec![parse("min(x1 + 0, 1)").unwrap()]));
        let gs = graph_sample(&diag, &[0.0], diag.domain(), 2).unwrap();
        assert_eq!(
            graph_rotundity_check(&diag, &gs, 1e-3, 5).unwrap().verdict,
            Rotundity::NotRotund
        );

        let sq = unit_map(MapFamily::Constant(ConvexSet::boxed([0.0], [1.0]).unwrap()));
        let gs = graph_sample(&sq, &[0.0], sq.domain(), 2).unwrap();
        let v = graph_rotundity_check(&sq, &gs, 1e-3, 5).unwrap();
        assert_eq!(v.verdict, Rotundity::NotRotund);
        let w = v.witness.unwrap();
        assert!(
            w.p[1] == w.q[1] && (w.p[1] == 0.0 || w.p[1] == 1.0),
            "{w:?}"
        );
    }
}
