//! Hypothesis checks shared by the existence report and the audits.

use crate::certificate::{Certificate, CheckResult, DecayRule, Verdict};
use crate::geometry::{Point, Rotundity};
use crate::mapping::{
    graph_convexity_check, graph_rotundity_check, graph_sample, joint_sequences, map_lsc_probe,
    map_usc_probe, range_containment_check, value_shape_check, GridDomain, MapError, SetValuedMap,
};
use crate::sequences::SequenceSpec;

/// Values may leave the domain box by at most this much.
pub const RANGE_TOL: f64 = 1e-9;
/// Parameter samples per axis for the range check.
pub const RANGE_PARAMS_PER_AXIS: usize = 5;
/// Samples per value column in graph checks.
pub const GRAPH_PER_X: usize = 3;

pub fn fmt_point(p: &[f64]) -> String {
    let v: Vec<String> = p.iter().map(|c| c.to_string()).collect();
    format!("({})", v.join(", "))
}

/// Boxes are compact and convex; a mask can break convexity.
pub fn domain_check(grid: &GridDomain) -> CheckResult {
    match grid.mask() {
        None => CheckResult::new("domain_compact_convex", Verdict::Pass, "box domain"),
        Some(m) => CheckResult::new(
            "domain_compact_convex",
            Verdict::Inconclusive,
            format!("masked by {m}; convexity of the mask is not checked"),
        ),
    }
}

pub fn shape_check(map: &dyn SetValuedMap, lambda: &[f64]) -> CheckResult {
    value_shape_check(map, map.domain(), lambda)
}

pub fn range_check(map: &dyn SetValuedMap) -> CheckResult {
    const NAME: &str = "range_containment";
    match range_containment_check(map, map.domain(), RANGE_PARAMS_PER_AXIS, RANGE_TOL) {
        Ok(r) => {
            let at = match (&r.worst_x, &r.worst_param) {
                (Some(x), Some(l)) => {
                    format!(" at x = {}, parameter = {}", fmt_point(x), fmt_point(l))
                }
                _ => String::new(),
            };
            CheckResult::new(
                NAME,
                r.verdict,
                format!(
                    "max_excess = {}{at} over {} samples",
                    r.max_excess, r.samples
                ),
            )
        }
        Err(e) => CheckResult::new(NAME, Verdict::Fail, e.to_string()),
    }
}

/// The grid graph checks run on: the map's domain coarsened to at most
/// roughly `cells` cells per axis (finer in low dimension).
pub fn audit_grid(grid: &GridDomain) -> Result<GridDomain, MapError> {
    let cells = match grid.dim() {
        1 => 100.0,
        2 => 20.0,
        _ => 6.0,
    };
    let bx = grid.bx();
    let extent = (0..grid.dim())
        .map(|a| bx.hi()[a] - bx.lo()[a])
        .fold(0.0, f64::max);
    let h = grid.h().max(extent / cells);
    if h == grid.h() {
        return Ok(grid.clone());
    }
    let g = GridDomain::new(bx.lo().clone(), bx.hi().clone(), h)?;
    match grid.mask() {
        Some(m) => g.with_mask(m.clone()),
        None => Ok(g),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    Lsc,
    Usc,
}

/// Continuity probes at the interior quantile points of the domain, at
/// parameter `lambda0`, moving `x`, the parameter, or both.
pub fn continuity_check(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    spec: &SequenceSpec,
    kind: ProbeKind,
    (vary_x, vary_param): (bool, bool),
    name: &str,
) -> (CheckResult, Vec<Certificate>) {
    let rule = DecayRule::envelope(map.domain().h());
    let mut certs = Vec::new();
    let mut worst: Option<(Verdict, Point)> = None;
    for x0 in map.domain().interior_quantiles() {
        let seqs = joint_sequences(map, &x0, lambda0, spec, vary_x, vary_param);
        let res = match kind {
            ProbeKind::Lsc => map_lsc_probe(map, &x0, lambda0, &seqs, &rule),
            ProbeKind::Usc => map_usc_probe(map, &x0, lambda0, &seqs, &rule),
        };
        let cert = match res {
            Ok(c) => c,
            Err(e) => return (CheckResult::new(name, Verdict::Fail, e.to_string()), certs),
        };
        if worst.as_ref().is_none_or(|(v, _)| cert.verdict > *v) {
            worst = Some((cert.verdict, x0.clone()));
        }
        certs.push(cert);
    }
    let verdict = Verdict::all(certs.iter().map(|c| c.verdict));
    let detail = match worst {
        Some((v, x)) if !v.is_ok() => format!(
            "{} probe points; worst {v} at x = {}",
            certs.len(),
            fmt_point(&x)
        ),
        _ => format!("{} probe points", certs.len()),
    };
    (CheckResult::new(name, verdict, detail), certs)
}

/// `graph_convex` and `graph_rotund` on the coarsened audit grid.
pub fn graph_checks(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    eta: f64,
    seed: u64,
    rotund: bool,
) -> Vec<CheckResult> {
    let fail = |name: &str, e: MapError| CheckResult::new(name, Verdict::Fail, e.to_string());
    let grid = match audit_grid(map.domain()) {
        Ok(g) => g,
        Err(e) => return vec![fail("graph_convex", e)],
    };
    let gs = match graph_sample(map, lambda0, &grid, GRAPH_PER_X) {
        Ok(g) => g,
        Err(e) => {
            let mut out = vec![fail("graph_convex", e.clone())];
            if rotund {
                out.push(fail("graph_rotund", e));
            }
            return out;
        }
    };
    let mut out = Vec::new();
    out.push(match graph_convexity_check(map, &gs, 1e-9, seed) {
        Ok(r) => {
            let detail = match &r.witness {
                Some(w) => format!(
                    "{} pairs; midpoint {} of {} and {} is {} off the graph",
                    r.pairs_checked,
                    w.t,
                    fmt_point(&w.a),
                    fmt_point(&w.b),
                    w.distance
                ),
                None => format!("{} pairs, h = {}", r.pairs_checked, grid.h()),
            };
            CheckResult::new("graph_convex", r.verdict, detail)
        }
        Err(e) => fail("graph_convex", e),
    });
    if rotund {
        out.push(match graph_rotundity_check(map, &gs, eta, seed) {
            Ok(r) => {
                let verdict = match r.verdict {
                    Rotundity::Rotund => Verdict::Pass,
                    Rotundity::NotRotund => Verdict::Fail,
                    Rotundity::Inconclusive => Verdict::Inconclusive,
                };
                let detail = match &r.witness {
                    Some(w) => format!(
                        "flat segment between {} and {} (margin {})",
                        fmt_point(&w.p),
                        fmt_point(&w.q),
                        r.margin
                    ),
                    None => format!("{} pairs, eta = {eta}", r.samples_used),
                };
                CheckResult::new("graph_rotund", verdict, detail)
            }
            Err(e) => fail("graph_rotund", e),
        });
    }
    out
}
