//! Parametric vector quasi-equilibrium problems with finite-set-valued
//! bifunctions ordered by a polyhedral cone.

use rayon::prelude::*;
use thiserror::Error;

use crate::certificate::{
    Anchor, Certificate, CheckResult, DecayRule, HypothesisAudit, Sequence, Target, Verdict,
    WitnessRecord,
};
use crate::certifier::{
    audit_solution_lsc, certificate_rule, certify_lsc, select_witnesses, CertifyOptions, LscRun,
};
use crate::checks::fmt_point;
use crate::expr::{Expr, ExprError, SlotEnv};
use crate::fixpoint::{solution_set, FixpointError, SolutionSet};
use crate::geometry::{dot, norm, sphere_directions, AxisBox, ConvexSet, Point};
use crate::mapping::{indexed, GridDomain, MapError, SetValuedMap, SetValuedMapDef};
use crate::sequences::{axis_sequences, parameter_sequences, SequenceSpec};

pub const DEFAULT_MU: f64 = 1e-9;
/// At most this many cells per axis when sampling `K(x, lambda)`.
pub const K_SAMPLE_CELLS: f64 = 64.0;
/// Points of the M-set used for the spot checks of the cone condition.
const CONDITION_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuasiEqError {
    #[error(transparent)]
    Fixpoint(#[from] FixpointError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("bifunction failed at {at}: {source}")]
    Eval {
        at: String,
        #[source]
        source: ExprError,
    },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// `C = {z : <n_i, z> >= 0 for all i}`; `z` is in `-int C` when
/// `<n_i, z> <= -mu` for every `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeDef {
    normals: Vec<Vec<f64>>,
    mu: f64,
}

impl ConeDef {
    pub fn new(normals: Vec<Vec<f64>>, mu: f64) -> Result<Self, QuasiEqError> {
        let bad = |m: &str| Err(QuasiEqError::Invalid(m.to_string()));
        let Some(m) = normals.first().map(Vec::len) else {
            return bad("a cone needs at least one normal");
        };
        if m == 0 || normals.iter().any(|n| n.len() != m) {
            return bad("cone normals must share one positive dimension");
        }
        if normals
            .iter()
            .any(|n| !(norm(n) > 0.0) || n.iter().any(|c| !c.is_finite()))
        {
            return bad("cone normals must be finite and nonzero");
        }
        if !(mu > 0.0) {
            return bad("the interior margin mu must be positive");
        }
        let cone = Self { normals, mu };
        if cone.interior_point().is_none() {
            return bad("could not find an interior point of the cone");
        }
        Ok(cone)
    }

    /// The nonnegative orthant of `R^m`.
    pub fn orthant(m: usize, mu: f64) -> Result<Self, QuasiEqError> {
        let normals = (0..m)
            .map(|i| {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            })
            .collect();
        Self::new(normals, mu)
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    /// A point with `<n_i, z> > 0` for all `i`, tried among the normalized
    /// sum of the normals and the normals themselves.
    pub fn interior_point(&self) -> Option<Vec<f64>> {
        let m = self.dim();
        let mut sum = vec![0.0; m];
        for n in &self.normals {
            let l = norm(n);
            for (s, c) in sum.iter_mut().zip(n) {
                *s += c / l;
            }
        }
        std::iter::once(sum)
            .chain(self.normals.iter().cloned())
            .find(|z| self.normals.iter().all(|n| dot(n, z) > 0.0))
    }

    pub fn in_neg_interior(&self, z: &[f64]) -> bool {
        self.normals.iter().all(|n| dot(n, z) <= -self.mu)
    }

    /// `z` not in `-C`, witnessed by some `<n_i, z> >= mu`.
    pub fn outside_neg_cone(&self, z: &[f64]) -> bool {
        self.normals.iter().any(|n| dot(n, z) >= self.mu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Which {
    M1,
    M2,
}

impl Which {
    pub fn as_str(self) -> &'static str {
        match self {
            Which::M1 => "m1",
            Which::M2 => "m2",
        }
    }

    pub fn target(self) -> Target {
        match self {
            Which::M1 => Target::M1Map,
            Which::M2 => Target::M2Map,
        }
    }

    pub fn inclusion(self) -> Inclusion {
        match self {
            Which::M1 => Inclusion::Weak,
            Which::M2 => Inclusion::Strict,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inclusion {
    Weak,
    Strict,
}

/// Constraint map `K(x, lambda)` on `D`, bifunction values
/// `F(x, y, u) = {z_1, ..., z_k}` in `R^m` over `x`, `y`, `u`, the cone and
/// the box `Omega` of `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiEqInstance {
    k: SetValuedMapDef,
    f: Vec<Vec<Expr>>,
    cone: ConeDef,
    omega: AxisBox,
}

impl QuasiEqInstance {
    pub fn new(
        k: SetValuedMapDef,
        f: Vec<Vec<Expr>>,
        cone: ConeDef,
        omega: AxisBox,
    ) -> Result<Self, QuasiEqError> {
        if f.is_empty() {
            return Err(QuasiEqError::Invalid(
                "the bifunction needs at least one value vector".into(),
            ));
        }
        if let Some(v) = f.iter().find(|v| v.len() != cone.dim()) {
            return Err(QuasiEqError::Invalid(format!(
                "bifunction vector has {} components but the cone lives in R^{}",
                v.len(),
                cone.dim()
            )));
        }
        if k.arg_prefix() != "x" || k.param_prefix() != "l" {
            return Err(QuasiEqError::Invalid(
                "the constraint map must be written over x and l".into(),
            ));
        }
        let (n, p) = (k.arg_dim(), omega.dim());
        for e in f.iter().flatten() {
            e.check_vars(|v| indexed(v, "x", n) || indexed(v, "y", n) || indexed(v, "u", p))
                .map_err(|v| {
                    QuasiEqError::Invalid(format!("bifunction uses undeclared variable `{v}`"))
                })?;
        }
        Ok(Self { k, f, cone, omega })
    }

    pub fn k(&self) -> &SetValuedMapDef {
        &self.k
    }

    pub fn f_exprs(&self) -> &[Vec<Expr>] {
        &self.f
    }

    pub fn cone(&self) -> &ConeDef {
        &self.cone
    }

    pub fn omega(&self) -> &AxisBox {
        &self.omega
    }

    pub fn domain(&self) -> &GridDomain {
        self.k.domain()
    }

    /// The joint `(u, lambda)` box.
    pub fn joint_params(&self) -> AxisBox {
        let lo: Vec<f64> = self
            .omega
            .lo()
            .iter()
            .chain(self.k.params().lo().iter())
            .copied()
            .collect();
        let hi: Vec<f64> = self
            .omega
            .hi()
            .iter()
            .chain(self.k.params().hi().iter())
            .copied()
            .collect();
        AxisBox::new(lo, hi).expect("both boxes are valid")
    }

    pub fn f_values(&self, x: &[f64], y: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, QuasiEqError> {
        let env = SlotEnv::new(&[("x", x), ("y", y), ("u", u)]);
        self.f
            .iter()
            .map(|v| {
                v.iter()
                    .map(|e| e.eval(&env))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| QuasiEqError::Eval {
                at: format!(
                    "x = {}, y = {}, u = {}",
                    fmt_point(x),
                    fmt_point(y),
                    fmt_point(u)
                ),
                source,
            })
    }

    pub fn feasible(
        &self,
        mode: Inclusion,
        x: &[f64],
        y: &[f64],
        u: &[f64],
    ) -> Result<bool, QuasiEqError> {
        match mode {
            Inclusion::Weak => weak_feasible(self, x, y, u),
            Inclusion::Strict => strong_feasible(self, x, y, u),
        }
    }

    fn split<'a>(&self, joint: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        joint.split_at(self.omega.dim())
    }
}

/// Some value of `F(x, y, u)` avoids `-int C`.
pub fn weak_feasible(
    inst: &QuasiEqInstance,
    x: &[f64],
    y: &[f64],
    u: &[f64],
) -> Result<bool, QuasiEqError> {
    Ok(inst
        .f_values(x, y, u)?
        .iter()
        .any(|z| !inst.cone.in_neg_interior(z)))
}

/// Every value of `F(x, y, u)` avoids `-int C`.
pub fn strong_feasible(
    inst: &QuasiEqInstance,
    x: &[f64],
    y: &[f64],
    u: &[f64],
) -> Result<bool, QuasiEqError> {
    Ok(inst
        .f_values(x, y, u)?
        .iter()
        .all(|z| !inst.cone.in_neg_interior(z)))
}

/// Grid points with `d(x, K(x, lambda)) <= tol`.
pub fn h_set(
    inst: &QuasiEqInstance,
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, FixpointError> {
    solution_set(&inst.k, lambda, tol)
}

/// Sample spacing for `K` values: `max(h, extent / 64)`.
pub fn k_spacing(inst: &QuasiEqInstance, set: &ConvexSet) -> f64 {
    let k = set.dim();
    let extent = (0..k)
        .map(|a| {
            let mut e = vec![0.0; k];
            e[a] = 1.0;
            let hi = set.support(&e);
            e[a] = -1.0;
            hi + set.support(&e)
        })
        .fold(0.0, f64::max);
    inst.domain().h().max(extent / K_SAMPLE_CELLS)
}

/// Extreme (or boundary) points of `set` and the points of a grid of
/// spacing `k_spacing` over its bounding box that lie in it.
pub fn k_samples(inst: &QuasiEqInstance, set: &ConvexSet) -> Vec<Point> {
    let k = set.dim();
    let mut out = match set {
        ConvexSet::Ball(_) => set.boundary_probes(&sphere_directions(k, 8 * k)),
        _ => set.extreme_points(),
    };
    let s = k_spacing(inst, set);
    let mut lo = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for a in 0..k {
        let mut e = vec![0.0; k];
        e[a] = -1.0;
        lo[a] = -set.support(&e);
        e[a] = 1.0;
        let hi = set.support(&e);
        counts[a] = if hi > lo[a] {
            ((hi - lo[a]) / s).floor() as usize + 1
        } else {
            1
        };
    }
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        let p: Vec<f64> = (0..k).map(|a| lo[a] + idx[a] as f64 * s).collect();
        if set.contains(&p, 0.0) {
            out.push(Point::new(p));
        }
        for a in (0..k).rev() {
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

fn m_set(
    inst: &QuasiEqInstance,
    which: Which,
    u: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, QuasiEqError> {
    let h = h_set(inst, lambda, tol)?;
    let mode = which.inclusion();
    let keep = h
        .points
        .par_iter()
        .map(|x| {
            let kv = inst.k.value(x, lambda)?;
            for y in k_samples(inst, &kv) {
                if !inst.feasible(mode, x, &y, u)? {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<Vec<bool>, QuasiEqError>>()?;
    let rows: Vec<(Point, f64)> = h
        .points
        .iter()
        .zip(&h.residuals)
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((p, &r), _)| (p.clone(), r))
        .collect();
    let param = Point::new(u.iter().chain(lambda).copied().collect());
    Ok(SolutionSet::from_points(
        param,
        None,
        rows,
        h.h,
        h.tol,
        h.threshold,
    ))
}

/// Weak solutions: points of `H(lambda)` where every sampled `y` of
/// `K(x, lambda)` has `F(x, y, u)` meeting the complement of `-int C`.
/// The set's parameter is the joint `(u, lambda)`.
pub fn m1_set(
    inst: &QuasiEqInstance,
    u: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, QuasiEqError> {
    m_set(inst, Which::M1, u, lambda, tol)
}

/// Strong solutions: as `m1_set` with every value of `F` avoiding `-int C`.
pub fn m2_set(
    inst: &QuasiEqInstance,
    u: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, QuasiEqError> {
    m_set(inst, Which::M2, u, lambda, tol)
}

pub fn m_set_of(
    inst: &QuasiEqInstance,
    which: Which,
    u: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, QuasiEqError> {
    m_set(inst, which, u, lambda, tol)
}

/// The joint `(x, y, u)` box `D x D x Omega`.
pub fn argument_box(inst: &QuasiEqInstance) -> AxisBox {
    let d = inst.domain().bx();
    let lo: Vec<f64> = d
        .lo()
        .iter()
        .chain(d.lo().iter())
        .chain(inst.omega.lo().iter())
        .copied()
        .collect();
    let hi: Vec<f64> = d
        .hi()
        .iter()
        .chain(d.hi().iter())
        .chain(inst.omega.hi().iter())
        .copied()
        .collect();
    AxisBox::new(lo, hi).expect("valid boxes")
}

/// Sequences converging to `(x0, y0, u0)` inside `D x D x Omega`.
pub fn argument_sequences(
    inst: &QuasiEqInstance,
    p0: &[f64],
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    let axes: Vec<usize> = (0..p0.len()).collect();
    axis_sequences(p0, &argument_box(inst), spec, &axes)
}

fn split3<'a>(inst: &QuasiEqInstance, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
    let n = inst.domain().dim();
    (&p[..n], &p[n..2 * n], &p[2 * n..])
}

/// Along each sequence to `p0 = (x0, y0, u0)`: when the premise holds at
/// `p0`, feasibility must hold on the last four steps (Pass); infeasibility
/// on all of them is a Fail, anything else Inconclusive. A false premise is
/// Vacuous. Distances record 0 for a feasible step and 1 otherwise. Nets
/// are replaced by these sequences.
pub fn c_inclusion_probe(
    inst: &QuasiEqInstance,
    p0: &[f64],
    seqs: &[Sequence],
    mode: Inclusion,
) -> Result<Certificate, QuasiEqError> {
    let target = match mode {
        Inclusion::Weak => Target::WeakInclusion,
        Inclusion::Strict => Target::StrictInclusion,
    };
    let anchor = Anchor {
        param: Point::from(p0),
        epsilon: None,
    };
    if seqs.is_empty() {
        return Ok(Certificate::inconclusive(
            target,
            anchor,
            "no usable sequence",
        ));
    }
    let (x0, y0, u0) = split3(inst, p0);
    let premise = inst.feasible(mode, x0, y0, u0)?;
    let mut records = Vec::with_capacity(seqs.len());
    for s in seqs {
        let d = s
            .steps
            .iter()
            .map(|st| {
                let (x, y, u) = split3(inst, &st.param);
                inst.feasible(mode, x, y, u)
                    .map(|ok| if ok { 0.0 } else { 1.0 })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let tail = &d[d.len().saturating_sub(4)..];
        let verdict = if !premise {
            Verdict::Vacuous
        } else if tail.iter().all(|&v| v == 0.0) {
            Verdict::Pass
        } else if tail.iter().all(|&v| v == 1.0) {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        records.push(WitnessRecord {
            witness_id: 0,
            witness: Point::from(p0),
            seq_id: s.id,
            steps: s.steps.clone(),
            plateau: (verdict == Verdict::Fail).then_some(1.0),
            distances: d,
            verdict,
        });
    }
    let mut cert = Certificate::from_records(target, anchor, records);
    if !premise {
        cert.reason = Some("premise false at the base point".into());
    }
    Ok(cert)
}

/// `(u, lambda)` sequences inside `Omega x Lambda`.
pub fn m_sequences(
    inst: &QuasiEqInstance,
    u0: &[f64],
    lambda0: &[f64],
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    let p: Vec<f64> = u0.iter().chain(lambda0).copied().collect();
    parameter_sequences(&p, &inst.joint_params(), spec)
}

/// Lower semicontinuity of `(u, lambda) -> M(u, lambda)` at `(u0, lambda0)`.
pub fn certify_m_lsc(
    inst: &QuasiEqInstance,
    which: Which,
    u0: &[f64],
    lambda0: &[f64],
    seqs: &[Sequence],
    opts: &CertifyOptions,
) -> Result<LscRun, QuasiEqError> {
    let tol = opts.tol_for(&inst.k);
    let base = m_set(inst, which, u0, lambda0, tol)?;
    let anchor = Anchor {
        param: base.lambda.clone(),
        epsilon: None,
    };
    certify_lsc(
        which.target(),
        anchor,
        base,
        seqs,
        &certificate_rule(&inst.k),
        opts.max_witnesses,
        |st| {
            let (u, l) = inst.split(&st.param);
            m_set(inst, which, u, l, tol)
        },
    )
}

/// Base points `(x, y, u0)` with `x, y` at the interior quantiles of `D`.
fn base_points(inst: &QuasiEqInstance, u0: &[f64]) -> Vec<Point> {
    let q = inst.domain().interior_quantiles();
    let mut out = Vec::with_capacity(q.len() * q.len());
    for x in &q {
        for y in &q {
            out.push(Point::new(
                x.iter().chain(y.iter()).chain(u0).copied().collect(),
            ));
        }
    }
    out
}

fn set_gap(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| crate::geometry::dist(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Continuity of the finite-set-valued `F` at `p0`: lower semicontinuity
/// asks every value at `p0` to be approached, upper every value along the
/// sequence to approach the values at `p0`.
pub fn f_continuity_probe(
    inst: &QuasiEqInstance,
    p0: &[f64],
    seqs: &[Sequence],
    lower: bool,
) -> Result<Certificate, QuasiEqError> {
    let rule = DecayRule::envelope(inst.domain().h());
    let (x0, y0, u0) = split3(inst, p0);
    let v0 = inst.f_values(x0, y0, u0)?;
    let mut records = Vec::with_capacity(seqs.len());
    for s in seqs {
        let d = s
            .steps
            .iter()
            .map(|st| {
                let (x, y, u) = split3(inst, &st.param);
                let v = inst.f_values(x, y, u)?;
                Ok(if lower {
                    set_gap(&v0, &v)
                } else {
                    set_gap(&v, &v0)
                })
            })
            .collect::<Result<Vec<f64>, QuasiEqError>>()?;
        let (verdict, plateau) = rule.classify(&s.ns(), &d);
        records.push(WitnessRecord {
            witness_id: 0,
            witness: Point::from(p0),
            seq_id: s.id,
            steps: s.steps.clone(),
            distances: d,
            verdict,
            plateau,
        });
    }
    let target = if lower {
        Target::MapLsc
    } else {
        Target::MapUsc
    };
    Ok(Certificate::from_records(
        target,
        Anchor {
            param: Point::from(p0),
            epsilon: None,
        },
        records,
    ))
}

/// The hypothesis audit for M-set lower semicontinuity, with the verdicts
/// of its two sufficient routes: constraint-map conditions together with
/// either continuity of `F` and the cone condition on the M-set, or the
/// C-inclusion property.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiEqAudit {
    pub audit: HypothesisAudit,
    pub semicontinuity_route: Verdict,
    pub inclusion_route: Verdict,
}

impl QuasiEqAudit {
    pub fn route_passes(&self) -> bool {
        self.semicontinuity_route.is_ok() || self.inclusion_route.is_ok()
    }

    pub fn report_lines(&self) -> Vec<String> {
        let mut out = self.audit.report_lines();
        out.push(format!(
            "{}.route_semicontinuity={}",
            self.audit.name, self.semicontinuity_route
        ));
        out.push(format!(
            "{}.route_inclusion={}",
            self.audit.name, self.inclusion_route
        ));
        out
    }
}

const K_CHECKS: [&str; 7] = [
    "k_domain_compact_convex",
    "k_values_nonempty_closed_convex",
    "k_range_containment",
    "k_map_lsc",
    "k_map_usc",
    "k_graph_convex",
    "k_graph_rotund",
];

pub fn audit_m_lsc(
    inst: &QuasiEqInstance,
    which: Which,
    u0: &[f64],
    lambda0: &[f64],
    opts: &CertifyOptions,
) -> Result<QuasiEqAudit, QuasiEqError> {
    let mut audit = HypothesisAudit::new(format!("{}_lsc", which.as_str()));
    let k = audit_solution_lsc(&inst.k, lambda0, opts);
    for mut c in k.checks {
        c.name = format!("k_{}", c.name);
        audit.push(c);
    }
    audit.probes.extend(k.probes);

    let points = base_points(inst, u0);
    let continuity_name = if which == Which::M1 { "f_lsc" } else { "f_usc" };
    let mut f_certs = Vec::new();
    let mut inc_certs = Vec::new();
    for p in &points {
        let seqs = argument_sequences(inst, p, &opts.spec);
        f_certs.push(f_continuity_probe(inst, p, &seqs, which == Which::M1)?);
        inc_certs.push(c_inclusion_probe(inst, p, &seqs, which.inclusion())?);
    }
    let summarize = |name: &str, certs: &[Certificate]| {
        let v = Verdict::all(certs.iter().map(|c| c.verdict));
        let bad = certs.iter().find(|c| !c.verdict.is_ok());
        let detail = match bad {
            Some(c) => format!(
                "{} base points; {} at {}",
                certs.len(),
                c.verdict,
                fmt_point(&c.anchor.param)
            ),
            None => format!("{} base points", certs.len()),
        };
        CheckResult::new(name, v, detail)
    };
    audit.push(summarize(continuity_name, &f_certs));
    audit.push(condition_check(inst, which, u0, lambda0, opts)?);
    audit.push(summarize("c_inclusion", &inc_certs));
    audit.probes.extend(f_certs);
    audit.probes.extend(inc_certs);

    let all_of = |names: &[&str]| {
        Verdict::all(
            names
                .iter()
                .map(|n| audit.get(n).unwrap_or(Verdict::Inconclusive)),
        )
    };
    let mut sc: Vec<&str> = K_CHECKS.to_vec();
    sc.extend([continuity_name, "cone_condition"]);
    let mut inc: Vec<&str> = K_CHECKS.to_vec();
    inc.push("c_inclusion");
    Ok(QuasiEqAudit {
        semicontinuity_route: all_of(&sc),
        inclusion_route: all_of(&inc),
        audit,
    })
}

/// For `x` in the M-set at `(u0, lambda0)` and sampled `y` in
/// `K(x, lambda0)`: some value (M1) or every value (M2) of `F(x, y, u0)`
/// lies outside `-C`.
fn condition_check(
    inst: &QuasiEqInstance,
    which: Which,
    u0: &[f64],
    lambda0: &[f64],
    opts: &CertifyOptions,
) -> Result<CheckResult, QuasiEqError> {
    const NAME: &str = "cone_condition";
    let m = m_set(inst, which, u0, lambda0, opts.tol_for(&inst.k))?;
    if m.is_empty() {
        return Ok(CheckResult::new(
            NAME,
            Verdict::Inconclusive,
            "empty solution set at the anchor",
        ));
    }
    let xs = select_witnesses(&m, CONDITION_POINTS);
    let mut spacing: f64 = 0.0;
    let mut checked = 0usize;
    for x in &xs {
        let kv = inst.k.value(x, lambda0)?;
        spacing = spacing.max(k_spacing(inst, &kv));
        for y in k_samples(inst, &kv) {
            checked += 1;
            let zs = inst.f_values(x, &y, u0)?;
            let ok = match which {
                Which::M1 => zs.iter().any(|z| inst.cone.outside_neg_cone(z)),
                Which::M2 => zs.iter().all(|z| inst.cone.outside_neg_cone(z)),
            };
            if !ok {
                return Ok(CheckResult::new(
                    NAME,
                    Verdict::Fail,
                    format!("violated at x = {}, y = {}", fmt_point(x), fmt_point(&y)),
                ));
            }
        }
    }
    Ok(CheckResult::new(
        NAME,
        Verdict::Pass,
        format!("{checked} (x, y) samples, y spacing {spacing}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::mapping::MapFamily;

    const H: f64 = 0.0078125;

    fn k_const(lo: f64, hi: f64, h: f64) -> SetValuedMapDef {
        SetValuedMapDef::new(
            MapFamily::Constant(ConvexSet::boxed([lo], [hi]).unwrap()),
            GridDomain::new([0.0], [1.0], h).unwrap(),
            AxisBox::new([0.0], [1.0]).unwrap(),
        )
        .unwrap()
    }

    fn inst(k: SetValuedMapDef, f: &[&str], omega: (f64, f64)) -> QuasiEqInstance {
        QuasiEqInstance::new(
            k,
            f.iter().map(|s| vec![parse(s).unwrap()]).collect(),
            ConeDef::orthant(1, DEFAULT_MU).unwrap(),
            AxisBox::new([omega.0], [omega.1]).unwrap(),
        )
        .unwrap()
    }

    fn linear() -> QuasiEqInstance {
        inst(k_const(0.0, 1.0, H), &["y1 - x1 + u1"], (0.0, 2.0))
    }

    #[test]
    fn cone_validation() {
        assert!(ConeDef::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], 1e-9).is_err());
        assert!(ConeDef::new(vec![vec![1.0]], 0.0).is_err());
        let c = ConeDef::orthant(2, 1e-9).unwrap();
        assert!(c.in_neg_interior(&[-1.0, -1.0]));
        assert!(!c.in_neg_interior(&[-1.0, 0.0]));
    }

    #[test]
    fn feasibility_examples() {
        let q = linear();
        assert!(weak_feasible(&q, &[0.5], &[0.5], &[0.0]).unwrap());
        let m = inst(k_const(0.0, 1.0, H), &["-1"], (0.0, 1.0));
        assert!(!weak_feasible(&m, &[0.5], &[0.5], &[0.0]).unwrap());
        let pm = inst(k_const(0.0, 1.0, H), &["-1", "1"], (0.0, 1.0));
        assert!(weak_feasible(&pm, &[0.5], &[0.5], &[0.0]).unwrap());
        assert!(!strong_feasible(&pm, &[0.5], &[0.5], &[0.0]).unwrap());
        let zp = inst(k_const(0.0, 1.0, H), &["0", "1"], (0.0, 1.0));
        assert!(strong_feasible(&zp, &[0.5], &[0.5], &[0.0]).unwrap());
    }

    #[test]
    fn empty_bifunction_is_rejected() {
        let r = QuasiEqInstance::new(
            k_const(0.0, 1.0, H),
            Vec::new(),
            ConeDef::orthant(1, DEFAULT_MU).unwrap(),
            AxisBox::new([0.0], [1.0]).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn linear_m1_is_an_initial_segment() {
        let q = linear();
        for u in [0.25, 0.5, 0.75, 1.5] {
            let m = m1_set(&q, &[u], &[0.0], 2.0 * H).unwrap();
            let want: Vec<Point> = q
                .domain()
                .points()
                .into_iter()
                .filter(|x| x[0] <= u.min(1.0))
                .collect();
            assert_eq!(m.points, want, "u = {u}");
            assert_eq!(m2_set(&q, &[u], &[0.0], 2.0 * H).unwrap().points, want);
        }
    }

    #[test]
    fn pair_bifunction_separates_m1_and_m2() {
        let q = inst(k_const(0.0, 1.0, H), &["y1 - x1 + u1", "1"], (0.0, 2.0));
        let m1 = m1_set(&q, &[0.5], &[0.0], 2.0 * H).unwrap();
        let m2 = m2_set(&q, &[0.5], &[0.0], 2.0 * H).unwrap();
        let hs = h_set(&q, &[0.0], 2.0 * H).unwrap();
        assert_eq!(m1.points, hs.points);
        assert!(m2.is_subset_of(&m1) && m2.len() < m1.len());
        assert_eq!(m2.bounds().unwrap().1[0], 0.5);
    }

    #[test]
    fn h_set_of_a_small_box() {
        let q = inst(k_const(0.2, 0.4, 0.01), &["1"], (0.0, 1.0));
        let s = h_set(&q, &[0.0], 1e-12).unwrap();
        let (lo, hi) = s.bounds().unwrap();
        assert!((lo[0] - 0.2).abs() < 1e-9 && (hi[0] - 0.4).abs() < 1e-9);
        let neg = inst(k_const(0.0, 1.0, 0.01), &["-1"], (0.0, 1.0));
        assert!(m2_set(&neg, &[0.0], &[0.0], 0.02).unwrap().is_empty());
    }

    #[test]
    fn inclusion_probe_verdicts() {
        let spec = SequenceSpec::default();
        let q = linear();
        // z = 0.5 > 0 at the base point and continuous
        let p = [0.5, 0.5, 0.5];
        let seqs = argument_sequences(&q, &p, &spec);
        assert_eq!(
            c_inclusion_probe(&q, &p, &seqs, Inclusion::Weak)
                .unwrap()
                .verdict,
            Verdict::Pass
        );
        let jump = inst(
            k_const(0.0, 1.0, H),
            &["1 - 2*min(1, abs(x1 - 0.5)*1e12)"],
            (0.0, 1.0),
        );
        let seqs = argument_sequences(&jump, &p, &spec);
        let c = c_inclusion_probe(&jump, &p, &seqs, Inclusion::Weak).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let moving: Vec<_> = c
            .records
            .iter()
            .filter(|r| r.steps[0].param[0] != 0.5)
            .collect();
        assert!(moving.iter().all(|r| r.verdict == Verdict::Fail));
        let neg = inst(k_const(0.0, 1.0, H), &["-1"], (0.0, 1.0));
        let seqs = argument_sequences(&neg, &p, &spec);
        assert_eq!(
            c_inclusion_probe(&neg, &p, &seqs, Inclusion::Weak)
                .unwrap()
                .verdict,
            Verdict::Vacuous
        );
    }

    #[test]
    fn m1_collapse_fails_certification() {
        let q = inst(k_const(0.0, 1.0, H), &["u1*(y1 - x1)"], (-1.0, 1.0));
        let opts = CertifyOptions::default();
        let seqs = m_sequences(&q, &[0.0], &[0.0], &opts.spec);
        let run = certify_m_lsc(&q, Which::M1, &[0.0], &[0.0], &seqs, &opts).unwrap();
        assert_eq!(run.certificate.verdict, Verdict::Fail);
        assert_eq!(run.base.len(), q.domain().points().len());
        let a = audit_m_lsc(&q, Which::M1, &[0.0], &[0.0], &opts).unwrap();
        assert_eq!(a.audit.get("cone_condition"), Some(Verdict::Fail));
        assert!(!a.semicontinuity_route.is_ok());
    }

    #[test]
    fn linear_m1_certifies_with_unmet_rotundity() {
        let q = linear();
        let opts = CertifyOptions::default();
        let seqs = m_sequences(&q, &[0.5], &[0.0], &opts.spec);
        let run = certify_m_lsc(&q, Which::M1, &[0.5], &[0.0], &seqs, &opts).unwrap();
        assert_eq!(run.certificate.verdict, Verdict::Pass);
        let a = audit_m_lsc(&q, Which::M1, &[0.5], &[0.0], &opts).unwrap();
        assert_eq!(a.audit.get("k_graph_rotund"), Some(Verdict::Fail));
    }
}
