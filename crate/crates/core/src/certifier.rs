//! Numeric lower-semicontinuity certificates for solution mappings and the
//! audits of the hypotheses that imply them.

use rayon::prelude::*;

use crate::certificate::{
    Anchor, Certificate, CheckResult, DecayRule, HypothesisAudit, Sequence, Step, Target, Verdict,
    WitnessRecord,
};
use crate::checks::{self, ProbeKind};
use crate::fixpoint::{approx_solution_set, default_tol, solution_set, FixpointError, SolutionSet};
use crate::geometry::Point;
use crate::mapping::SetValuedMap;
use crate::sequences::{approx_sequences, parameter_sequences, SequenceSpec};

pub const DEFAULT_MAX_WITNESSES: usize = 32;
pub const DEFAULT_ETA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub spec: SequenceSpec,
    pub max_witnesses: usize,
    /// Residual tolerance; `2 h` when unset.
    pub tol: Option<f64>,
    /// Rotundity margin for graph audits.
    pub eta: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            spec: SequenceSpec::default(),
            max_witnesses: DEFAULT_MAX_WITNESSES,
            tol: None,
            eta: DEFAULT_ETA,
        }
    }
}

impl CertifyOptions {
    pub fn tol_for(&self, map: &dyn SetValuedMap) -> f64 {
        self.tol.unwrap_or_else(|| default_tol(map))
    }
}

/// The set computed at one step of one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSet {
    pub seq_id: usize,
    pub n: usize,
    pub set: SolutionSet,
}

/// A certificate together with the sets its distances were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct LscRun {
    pub certificate: Certificate,
    pub base: SolutionSet,
    pub step_sets: Vec<StepSet>,
}

impl LscRun {
    pub fn step_set(&self, seq_id: usize, n: usize) -> Option<&SolutionSet> {
        self.step_sets
            .iter()
            .find(|s| s.seq_id == seq_id && s.n == n)
            .map(|s| &s.set)
    }
}

/// Per-coordinate extremes of the set first, then evenly spaced points of
/// the sorted list, `max` in total.
pub fn select_witnesses(set: &SolutionSet, max: usize) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    let pts = &set.points;
    if pts.is_empty() || max == 0 {
        return out;
    }
    let push = |p: &Point, out: &mut Vec<Point>| {
        if out.len() < max && !out.contains(p) {
            out.push(p.clone());
        }
    };
    let k = pts[0].dim();
    for a in 0..k {
        let mut lo = &pts[0];
        let mut hi = &pts[0];
        for p in pts {
            if p[a] < lo[a] {
                lo = p;
            }
            if p[a] > hi[a] {
                hi = p;
            }
        }
        push(lo, &mut out);
        push(hi, &mut out);
    }
    let spread = max.saturating_sub(out.len());
    if spread > 0 && pts.len() > 1 {
        for i in 0..spread {
            let j = (i + 1) * (pts.len() - 1) / (spread + 1);
            push(&pts[j], &mut out);
        }
    }
    out
}

/// Distances `d(x0, S_n)` from each witness of `base` to the set solved at
/// every step of every sequence.
pub fn certify_lsc<E, F>(
    target: Target,
    anchor: Anchor,
    base: SolutionSet,
    seqs: &[Sequence],
    rule: &DecayRule,
    max_witnesses: usize,
    solve: F,
) -> Result<LscRun, E>
where
    E: Send,
    F: Fn(&Step) -> Result<SolutionSet, E> + Sync,
{
    if base.is_empty() {
        return Ok(LscRun {
            certificate: Certificate::inconclusive(
                target,
                anchor,
                "the solution set at the anchor is empty",
            ),
            base,
            step_sets: Vec::new(),
        });
    }
    if seqs.is_empty() {
        return Ok(LscRun {
            certificate: Certificate::inconclusive(
                target,
                anchor,
                "no sequence stays inside the parameter box",
            ),
            base,
            step_sets: Vec::new(),
        });
    }
    let jobs: Vec<(usize, &Step)> = seqs
        .iter()
        .flat_map(|s| s.steps.iter().map(move |st| (s.id, st)))
        .collect();
    let step_sets = jobs
        .par_iter()
        .map(|&(seq_id, st)| {
            solve(st).map(|set| StepSet {
                seq_id,
                n: st.n,
                set,
            })
        })
        .collect::<Result<Vec<_>, E>>()?;
    let witnesses = select_witnesses(&base, max_witnesses);
    let mut records = Vec::with_capacity(witnesses.len() * seqs.len());
    let mut offset = 0;
    for s in seqs {
        let sets = &step_sets[offset..offset + s.steps.len()];
        offset += s.steps.len();
        for (wid, w) in witnesses.iter().enumerate() {
            let d: Vec<f64> = sets.iter().map(|ss| ss.set.distance_to(w)).collect();
            let (verdict, plateau) = rule.classify(&s.ns(), &d);
            records.push(WitnessRecord {
                witness_id: wid,
                witness: w.clone(),
                seq_id: s.id,
                steps: s.steps.clone(),
                distances: d,
                verdict,
                plateau,
            });
        }
    }
    Ok(LscRun {
        certificate: Certificate::from_records(target, anchor, records),
        base,
        step_sets,
    })
}

/// The decay rule certificates use: the last four distances within `10 h`.
pub fn certificate_rule(map: &dyn SetValuedMap) -> DecayRule {
    DecayRule::tail(map.domain().h())
}

pub fn solution_sequences(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    parameter_sequences(lambda0, map.params(), spec)
}

pub fn approx_map_sequences(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    eps0: f64,
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    approx_sequences(lambda0, eps0, map.params(), spec)
}

/// Lower semicontinuity of `lambda -> S(lambda)` at `lambda0`.
pub fn certify_solution_lsc(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    seqs: &[Sequence],
    opts: &CertifyOptions,
) -> Result<LscRun, FixpointError> {
    let tol = opts.tol_for(map);
    let base = solution_set(map, lambda0, tol)?;
    let anchor = Anchor {
        param: Point::from(lambda0),
        epsilon: None,
    };
    certify_lsc(
        Target::SolutionMap,
        anchor,
        base,
        seqs,
        &certificate_rule(map),
        opts.max_witnesses,
        |st| solution_set(map, &st.param, tol),
    )
}

/// Lower semicontinuity of `(lambda, eps) -> E(lambda, eps)` at `(lambda0, eps0)`.
pub fn certify_approx_lsc(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    eps0: f64,
    seqs: &[Sequence],
    opts: &CertifyOptions,
) -> Result<LscRun, FixpointError> {
    let tol = opts.tol_for(map);
    let anchor = Anchor {
        param: Point::from(lambda0),
        epsilon: Some(eps0),
    };
    if !(eps0 > 0.0) {
        return Ok(LscRun {
            certificate: Certificate::inconclusive(
                Target::ApproxMap,
                anchor,
                "approximate-set certification needs epsilon0 > 0",
            ),
            base: solution_set(map, lambda0, tol)?,
            step_sets: Vec::new(),
        });
    }
    let base = approx_solution_set(map, lambda0, eps0, tol)?;
    certify_lsc(
        Target::ApproxMap,
        anchor,
        base,
        seqs,
        &certificate_rule(map),
        opts.max_witnesses,
        |st| approx_solution_set(map, &st.param, st.epsilon.unwrap_or(eps0).max(0.0), tol),
    )
}

/// Rotund graph at `lambda0`, continuity on `A x {lambda0}` and nonempty
/// closed convex values inside the domain.
pub fn audit_solution_lsc(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    opts: &CertifyOptions,
) -> HypothesisAudit {
    let mut audit = HypothesisAudit::new("solution_lsc");
    audit.push(checks::domain_check(map.domain()));
    audit.push(checks::shape_check(map, lambda0));
    audit.push(checks::range_check(map));
    for (kind, name) in [(ProbeKind::Lsc, "map_lsc"), (ProbeKind::Usc, "map_usc")] {
        let (c, probes) =
            checks::continuity_check(map, lambda0, &opts.spec, kind, (true, true), name);
        audit.push(c);
        audit.probes.extend(probes);
    }
    for c in checks::graph_checks(map, lambda0, opts.eta, opts.spec.seed, true) {
        audit.push(c);
    }
    audit
}

/// Convex graph at `lambda0`, upper semicontinuity in `x`, lower
/// semicontinuity in the parameter at every sampled `x`, and `eps0 > 0`.
pub fn audit_approx_lsc(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    eps0: f64,
    opts: &CertifyOptions,
) -> HypothesisAudit {
    let mut audit = HypothesisAudit::new("approx_lsc");
    audit.push(checks::domain_check(map.domain()));
    audit.push(checks::shape_check(map, lambda0));
    audit.push(checks::range_check(map));
    for c in checks::graph_checks(map, lambda0, opts.eta, opts.spec.seed, false) {
        audit.push(c);
    }
    let (c, probes) = checks::continuity_check(
        map,
        lambda0,
        &opts.spec,
        ProbeKind::Usc,
        (true, false),
        "map_usc_in_x",
    );
    audit.push(c);
    audit.probes.extend(probes);
    let (c, probes) = checks::continuity_check(
        map,
        lambda0,
        &opts.spec,
        ProbeKind::Lsc,
        (false, true),
        "map_lsc_in_param",
    );
    audit.push(c);
    audit.probes.extend(probes);
    audit.push(if eps0 > 0.0 {
        CheckResult::new("epsilon_positive", Verdict::Pass, format!("eps0 = {eps0}"))
    } else {
        CheckResult::new("epsilon_positive", Verdict::Fail, format!("eps0 = {eps0}"))
    });
    audit
}
