//! Sequential continuity probes of a map at a point and the range check.

use rayon::prelude::*;

use super::{set_samples, GridDomain, MapError, SetValuedMap};
use crate::certificate::{
    Anchor, Certificate, CheckResult, DecayRule, Sequence, Target, Verdict, WitnessRecord,
};
use crate::geometry::{AxisBox, ConvexSet, Point};
use crate::sequences::{axis_sequences, SequenceSpec};

const USC_DIRS: usize = 16;
const DENSE_DIRS: usize = 64;
const DENSE_INTERIOR: usize = 16;
const LSC_INTERIOR: usize = 3;

fn joint(x: &[f64], l: &[f64]) -> Point {
    Point::new(x.iter().chain(l).copied().collect())
}

/// Sequences converging to `(x0, lambda0)` inside `domain box x parameter box`,
/// moving `x`, the parameter, or both.
pub fn joint_sequences(
    map: &dyn SetValuedMap,
    x0: &[f64],
    lambda0: &[f64],
    spec: &SequenceSpec,
    vary_x: bool,
    vary_param: bool,
) -> Vec<Sequence> {
    let (n, p) = (map.arg_dim(), map.param_dim());
    let bx = map.domain().bx();
    let pb = map.params();
    let lo: Vec<f64> = bx.lo().iter().chain(pb.lo().iter()).copied().collect();
    let hi: Vec<f64> = bx.hi().iter().chain(pb.hi().iter()).copied().collect();
    let Ok(bounds) = AxisBox::new(lo, hi) else {
        return Vec::new();
    };
    let mut axes = Vec::new();
    if vary_x {
        axes.extend(0..n);
    }
    if vary_param {
        axes.extend(n..n + p);
    }
    axis_sequences(&joint(x0, lambda0), &bounds, spec, &axes)
}

/// `T(x_n, lambda_n)` for every step of every sequence.
fn step_values(map: &dyn SetValuedMap, seqs: &[Sequence]) -> Result<Vec<Vec<ConvexSet>>, MapError> {
    let n = map.arg_dim();
    seqs.par_iter()
        .map(|s| {
            s.steps
                .iter()
                .map(|st| map.value(&st.param[..n], &st.param[n..]))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

fn record(
    rule: &DecayRule,
    witness_id: usize,
    witness: Point,
    seq: &Sequence,
    distances: Vec<f64>,
) -> WitnessRecord {
    let (verdict, plateau) = rule.classify(&seq.ns(), &distances);
    WitnessRecord {
        witness_id,
        witness,
        seq_id: seq.id,
        steps: seq.steps.clone(),
        distances,
        verdict,
        plateau,
    }
}

fn anchor(x0: &[f64], lambda0: &[f64]) -> Anchor {
    Anchor {
        param: joint(x0, lambda0),
        epsilon: None,
    }
}

/// Lower semicontinuity at `(x0, lambda0)`: every sampled `y0` in
/// `T(x0, lambda0)` must be approached, `d(y0, T(x_n, lambda_n)) -> 0`.
pub fn map_lsc_probe(
    map: &dyn SetValuedMap,
    x0: &[f64],
    lambda0: &[f64],
    seqs: &[Sequence],
    rule: &DecayRule,
) -> Result<Certificate, MapError> {
    let v0 = map.value(x0, lambda0)?;
    let (mut ys, interior) = set_samples(&v0, USC_DIRS, LSC_INTERIOR);
    ys.extend(interior);
    let values = step_values(map, seqs)?;
    let mut records = Vec::with_capacity(ys.len() * seqs.len());
    for (wid, y0) in ys.iter().enumerate() {
        for (s, vals) in seqs.iter().zip(&values) {
            let d = vals.iter().map(|v| v.distance(y0)).collect();
            records.push(record(rule, wid, y0.clone(), s, d));
        }
    }
    Ok(Certificate::from_records(
        Target::MapLsc,
        anchor(x0, lambda0),
        records,
    ))
}

/// Upper semicontinuity at `(x0, lambda0)`: boundary samples of
/// `T(x_n, lambda_n)` must approach `T(x0, lambda0)`.
pub fn map_usc_probe(
    map: &dyn SetValuedMap,
    x0: &[f64],
    lambda0: &[f64],
    seqs: &[Sequence],
    rule: &DecayRule,
) -> Result<Certificate, MapError> {
    let v0 = map.value(x0, lambda0)?;
    let values = step_values(map, seqs)?;
    let records = seqs
        .iter()
        .zip(&values)
        .map(|(s, vals)| {
            let d = vals
                .iter()
                .map(|v| {
                    let (b, _) = set_samples(v, USC_DIRS, 0);
                    b.iter().map(|y| v0.distance(y)).fold(0.0, f64::max)
                })
                .collect();
            record(rule, 0, Point::from(x0), s, d)
        })
        .collect();
    Ok(Certificate::from_records(
        Target::MapUsc,
        anchor(x0, lambda0),
        records,
    ))
}

/// Hausdorff lower semicontinuity: the excess of a dense sample of
/// `T(x0, lambda0)` over `T(x_n, lambda_n)` must vanish.
pub fn map_hlsc_probe(
    map: &dyn SetValuedMap,
    x0: &[f64],
    lambda0: &[f64],
    seqs: &[Sequence],
    rule: &DecayRule,
) -> Result<Certificate, MapError> {
    let v0 = map.value(x0, lambda0)?;
    let (mut dense, interior) = set_samples(&v0, DENSE_DIRS, DENSE_INTERIOR);
    dense.extend(interior);
    dense.extend(v0.extreme_points());
    let values = step_values(map, seqs)?;
    let records = seqs
        .iter()
        .zip(&values)
        .map(|(s, vals)| {
            let d = vals
                .iter()
                .map(|v| dense.iter().map(|p| v.distance(p)).fold(0.0, f64::max))
                .collect();
            record(rule, 0, Point::from(x0), s, d)
        })
        .collect();
    Ok(Certificate::from_records(
        Target::MapHlsc,
        anchor(x0, lambda0),
        records,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeReport {
    pub verdict: Verdict,
    pub max_excess: f64,
    pub worst_x: Option<Point>,
    pub worst_param: Option<Point>,
    pub samples: usize,
}

fn param_grid(pb: &AxisBox, per_axis: usize) -> Vec<Point> {
    let k = pb.dim();
    let per = per_axis.max(1);
    let axis_vals: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            let (l, u) = (pb.lo()[a], pb.hi()[a]);
            if l == u || per == 1 {
                vec![0.5 * (l + u)]
            } else {
                (0..per)
                    .map(|i| l + (u - l) * i as f64 / (per - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut out = vec![Vec::new()];
    for vals in &axis_vals {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                vals.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(Point::new).collect()
}

/// `max sup_{y in T(x, l)} d(y, domain box)` over grid `x` and `per_axis`
/// evenly spaced values per parameter axis; passes iff `<= tol`.
pub fn range_containment_check(
    map: &dyn SetValuedMap,
    grid: &GridDomain,
    per_axis: usize,
    tol: f64,
) -> Result<RangeReport, MapError> {
    let params = param_grid(map.params(), per_axis);
    let xs = grid.points();
    let dom = map.domain().bx();
    let per_x: Vec<(f64, usize)> = xs
        .par_iter()
        .map(|x| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, l) in params.iter().enumerate() {
                let e = map.value(x, l)?.excess_over_box(dom);
                if e > best.0 {
                    best = (e, j);
                }
            }
            Ok(best)
        })
        .collect::<Result<_, MapError>>()?;
    let mut worst: Option<(f64, usize, usize)> = None;
    for (i, &(e, j)) in per_x.iter().enumerate() {
        if worst.is_none_or(|w| e > w.0) {
            worst = Some((e, i, j));
        }
    }
    let (max_excess, wx, wl) = match worst {
        Some((e, i, j)) => (e, Some(xs[i].clone()), Some(params[j].clone())),
        None => (0.0, None, None),
    };
    Ok(RangeReport {
        verdict: if max_excess <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        max_excess,
        worst_x: wx,
        worst_param: wl,
        samples: xs.len() * params.len(),
    })
}

/// Every grid value is nonempty (closed and convex by representation).
pub fn value_shape_check(map: &dyn SetValuedMap, grid: &GridDomain, lambda: &[f64]) -> CheckResult {
    let pts = grid.points();
    let first_err = pts
        .par_iter()
        .map(|x| map.value(x, lambda).err())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    match first_err {
        None => CheckResult::new(
            "values_nonempty_closed_convex",
            Verdict::Pass,
            format!("{} grid values", pts.len()),
        ),
        Some(e) => CheckResult::new(
            "values_nonempty_closed_convex",
            Verdict::Fail,
            e.to_string(),
        ),
    }
}
