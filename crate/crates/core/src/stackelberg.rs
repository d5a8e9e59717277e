//! Leader-follower problems where the follower's responses are the fixed
//! points of a set-valued map parameterized by the leader's strategy.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::certificate::{Anchor, Sequence, Target};
use crate::certifier::{certificate_rule, certify_lsc, CertifyOptions, LscRun};
use crate::expr::{Expr, ExprError, SlotEnv};
use crate::fixpoint::{solution_set, FixpointError, SolutionSet};
use crate::geometry::{dist, Point};
use crate::mapping::{indexed, GridDomain, SetValuedMap, SetValuedMapDef};
use crate::sequences::{parameter_sequences, SequenceSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackelbergError {
    #[error(transparent)]
    Fixpoint(#[from] FixpointError),
    #[error("objective failed at x = {x}, y = {y}: {source}")]
    Objective {
        x: Point,
        y: Point,
        #[source]
        source: ExprError,
    },
    #[error("empty response set at x = {0}")]
    EmptyResponse(Point),
    #[error("every response set is empty")]
    NoFeasibleLeader,
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Selection,
    Optimistic,
    Pessimistic,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Optimistic, Mode::Selection, Mode::Pessimistic];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Selection => "selection",
            Mode::Optimistic => "optimistic",
            Mode::Pessimistic => "pessimistic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

/// Leader grid `K1`, follower map `T(y, x)` over `K2` with the leader's
/// strategy as parameter, and the leader's loss `f(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackelbergInstance {
    leader: GridDomain,
    follower: SetValuedMapDef,
    objective: Expr,
}

impl StackelbergInstance {
    /// The follower must use `y` for its argument and `x` for its parameter,
    /// with parameter box equal to the leader box.
    pub fn new(
        leader: GridDomain,
        follower: SetValuedMapDef,
        objective: Expr,
    ) -> Result<Self, StackelbergError> {
        if follower.arg_prefix() != "y" || follower.param_prefix() != "x" {
            return Err(StackelbergError::Invalid(
                "the follower map must be written over y (argument) and x (parameter)".into(),
            ));
        }
        if follower.params() != leader.bx() {
            return Err(StackelbergError::Invalid(
                "the follower's parameter box must be the leader box".into(),
            ));
        }
        let (n1, n2) = (leader.dim(), follower.arg_dim());
        objective
            .check_vars(|v| indexed(v, "x", n1) || indexed(v, "y", n2))
            .map_err(|v| {
                StackelbergError::Invalid(format!("objective uses undeclared variable `{v}`"))
            })?;
        Ok(Self {
            leader,
            follower,
            objective,
        })
    }

    pub fn leader(&self) -> &GridDomain {
        &self.leader
    }

    pub fn follower(&self) -> &SetValuedMapDef {
        &self.follower
    }

    pub fn objective_expr(&self) -> &Expr {
        &self.objective
    }

    pub fn objective(&self, x: &[f64], y: &[f64]) -> Result<f64, StackelbergError> {
        self.objective
            .eval(&SlotEnv::new(&[("x", x), ("y", y)]))
            .map_err(|source| StackelbergError::Objective {
                x: Point::from(x),
                y: Point::from(y),
                source,
            })
    }
}

/// `R'(x)`: the fixed points of `T(., x)` on the follower grid.
pub fn response_set(
    inst: &StackelbergInstance,
    x: &[f64],
    tol: f64,
) -> Result<SolutionSet, FixpointError> {
    solution_set(&inst.follower, x, tol)
}

/// Response sets at every leader grid point, with multi-indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Responses {
    pub tol: f64,
    pub entries: Vec<(Vec<usize>, Point, SolutionSet)>,
}

pub fn responses(inst: &StackelbergInstance, tol: f64) -> Result<Responses, FixpointError> {
    let entries = inst
        .leader
        .indexed_points()
        .into_par_iter()
        .map(|(idx, x)| response_set(inst, &x, tol).map(|s| (idx, x, s)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Responses { tol, entries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTable {
    pub anchor: Point,
    /// `(x, r(x))` in leader grid order.
    pub rows: Vec<(Point, Point)>,
    /// `max |r(x) - r(x')| / |x - x'|` over grid neighbours.
    pub modulus: f64,
}

fn nearest_selection(r: &Responses, anchor: &[f64]) -> Vec<(Vec<usize>, Point, Option<Point>)> {
    r.entries
        .iter()
        .map(|(idx, x, s)| (idx.clone(), x.clone(), s.nearest(anchor).cloned()))
        .collect()
}

fn modulus(rows: &[(Vec<usize>, Point, Option<Point>)]) -> f64 {
    let at: HashMap<&[usize], usize> = rows
        .iter()
        .enumerate()
        .map(|(i, (idx, _, _))| (idx.as_slice(), i))
        .collect();
    let mut m: f64 = 0.0;
    for (idx, x, r) in rows {
        let Some(r) = r else { continue };
        for a in 0..idx.len() {
            let mut nb = idx.clone();
            nb[a] += 1;
            if let Some(&j) = at.get(nb.as_slice()) {
                if let (x2, Some(r2)) = (&rows[j].1, &rows[j].2) {
                    m = m.max(dist(r, r2) / dist(x, x2));
                }
            }
        }
    }
    m
}

/// `r(x)`: the point of `R'(x)` nearest to `anchor`.
pub fn selection(
    inst: &StackelbergInstance,
    anchor: &[f64],
    tol: f64,
) -> Result<SelectionTable, StackelbergError> {
    selection_from(&responses(inst, tol)?, anchor)
}

pub fn selection_from(r: &Responses, anchor: &[f64]) -> Result<SelectionTable, StackelbergError> {
    let sel = nearest_selection(r, anchor);
    if let Some((_, x, _)) = sel.iter().find(|(_, _, y)| y.is_none()) {
        return Err(StackelbergError::EmptyResponse(x.clone()));
    }
    Ok(SelectionTable {
        anchor: Point::from(anchor),
        modulus: modulus(&sel),
        rows: sel
            .into_iter()
            .map(|(_, x, y)| (x, y.expect("checked nonempty")))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub x: Point,
    /// `None` when the response set is empty.
    pub inner_value: Option<f64>,
    pub y: Option<Point>,
    pub set_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackelbergSolution {
    pub mode: Mode,
    pub x_star: Point,
    pub y_star: Point,
    pub value: f64,
    pub rows: Vec<TableRow>,
    /// Leader points excluded for an empty response set.
    pub warnings: Vec<String>,
    /// Selection mode only.
    pub modulus: Option<f64>,
}

impl StackelbergSolution {
    /// Header `x_1..,inner_value,r_y_1..,set_size`, one row per leader point,
    /// and a final `x*..,y*..,value,mode` line.
    pub fn to_csv(&self, n1: usize, n2: usize) -> String {
        let mut s = String::new();
        let xs: Vec<String> = (1..=n1).map(|i| format!("x_{i}")).collect();
        let ys: Vec<String> = (1..=n2).map(|i| format!("r_y_{i}")).collect();
        let _ = writeln!(s, "{},inner_value,{},set_size", xs.join(","), ys.join(","));
        for r in &self.rows {
            let x: Vec<String> = r.x.iter().map(f64::to_string).collect();
            let v = r.inner_value.map(|v| v.to_string()).unwrap_or_default();
            let y: Vec<String> = match &r.y {
                Some(y) => y.iter().map(f64::to_string).collect(),
                None => vec![String::new(); n2],
            };
            let _ = writeln!(s, "{},{v},{},{}", x.join(","), y.join(","), r.set_size);
        }
        let x: Vec<String> = self.x_star.iter().map(f64::to_string).collect();
        let y: Vec<String> = self.y_star.iter().map(f64::to_string).collect();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            x.join(","),
            y.join(","),
            self.value,
            self.mode.as_str()
        );
        s
    }
}

pub fn solve(
    inst: &StackelbergInstance,
    mode: Mode,
    anchor: &[f64],
    tol: f64,
) -> Result<StackelbergSolution, StackelbergError> {
    solve_from(inst, &responses(inst, tol)?, mode, anchor)
}

/// Inner value per leader point for `mode`, then the first strict minimum in
/// leader grid order.
pub fn solve_from(
    inst: &StackelbergInstance,
    r: &Responses,
    mode: Mode,
    anchor: &[f64],
) -> Result<StackelbergSolution, StackelbergError> {
    let inner = |x: &Point, s: &SolutionSet| -> Result<Option<(f64, Point)>, StackelbergError> {
        if s.is_empty() {
            return Ok(None);
        }
        if mode == Mode::Selection {
            let y = s.nearest(anchor).expect("nonempty").clone();
            return Ok(Some((inst.objective(x, &y)?, y)));
        }
        let mut best: Option<(f64, &Point)> = None;
        for y in &s.points {
            let v = inst.objective(x, y)?;
            let better = match (mode, best) {
                (_, None) => true,
                (Mode::Pessimistic, Some((b, _))) => v > b,
                (_, Some((b, _))) => v < b,
            };
            if better {
                best = Some((v, y));
            }
        }
        Ok(best.map(|(v, y)| (v, y.clone())))
    };
    let values = r
        .entries
        .par_iter()
        .map(|(_, x, s)| inner(x, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(values.len());
    let mut warnings = Vec::new();
    let mut best: Option<usize> = None;
    for (i, ((_, x, s), v)) in r.entries.iter().zip(&values).enumerate() {
        match v {
            None => warnings.push(format!("empty response set at x = {x}; excluded")),
            Some((val, _)) => {
                if best.is_none_or(|b| *val < values[b].as_ref().expect("feasible").0) {
                    best = Some(i);
                }
            }
        }
        rows.push(TableRow {
            x: x.clone(),
            inner_value: v.as_ref().map(|p| p.0),
            y: v.as_ref().map(|p| p.1.clone()),
            set_size: s.len(),
        });
    }
    let Some(b) = best else {
        return Err(StackelbergError::NoFeasibleLeader);
    };
    let (value, y_star) = values[b].clone().expect("feasible");
    let modulus = (mode == Mode::Selection).then(|| modulus(&nearest_selection(r, anchor)));
    Ok(StackelbergSolution {
        mode,
        x_star: r.entries[b].1.clone(),
        y_star,
        value,
        rows,
        warnings,
        modulus,
    })
}

pub fn response_sequences(
    inst: &StackelbergInstance,
    x0: &[f64],
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    parameter_sequences(x0, inst.leader.bx(), spec)
}

/// Lower semicontinuity of `x -> R'(x)` at `x0`.
pub fn response_lsc_certify(
    inst: &StackelbergInstance,
    x0: &[f64],
    seqs: &[Sequence],
    opts: &CertifyOptions,
) -> Result<LscRun, FixpointError> {
    let tol = opts.tol_for(&inst.follower);
    let base = response_set(inst, x0, tol)?;
    let anchor = Anchor {
        param: Point::from(x0),
        epsilon: None,
    };
    certify_lsc(
        Target::ResponseMap,
        anchor,
        base,
        seqs,
        &certificate_rule(&inst.follower),
        opts.max_witnesses,
        |st| response_set(inst, &st.param, tol),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::Verdict;
    use crate::expr::parse;
    use crate::geometry::AxisBox;
    use crate::mapping::MapFamily;

    fn unit(h: f64) -> GridDomain {
        GridDomain::new([0.0], [1.0], h).unwrap()
    }

    fn follower(family: MapFamily, h: f64) -> SetValuedMapDef {
        SetValuedMapDef::with_prefixes(
            family,
            unit(h),
            AxisBox::new([0.0], [1.0]).unwrap(),
            "y",
            "x",
        )
        .unwrap()
        .clamped(true)
    }

    fn box_instance(h: f64) -> StackelbergInstance {
        let fam = MapFamily::IntervalBox {
            lo: vec![parse("x1/2 - 0.2").unwrap()],
            hi: vec![parse("x1/2 + 0.2").unwrap()],
        };
        StackelbergInstance::new(
            unit(h),
            follower(fam, h),
            parse("(x1 - 0.5)^2 + y1").unwrap(),
        )
        .unwrap()
    }

    fn identity_instance(h: f64) -> StackelbergInstance {
        let fam = MapFamily::Singleton(vec![parse("y1").unwrap()]);
        StackelbergInstance::new(unit(h), follower(fam, h), parse("y1").unwrap()).unwrap()
    }

    #[test]
    fn box_response_at_one() {
        let inst = box_instance(0.01);
        let s = response_set(&inst, &[1.0], 1e-12).unwrap();
        let (lo, hi) = s.bounds().unwrap();
        assert!((lo[0] - 0.3).abs() < 1e-9 && (hi[0] - 0.7).abs() < 1e-9);
        assert_eq!(s.len(), 41);
    }

    #[test]
    fn identity_response_is_everything() {
        let inst = identity_instance(0.05);
        assert_eq!(response_set(&inst, &[0.3], 0.0).unwrap().len(), 21);
        let t = selection(&inst, &[0.5], 0.0).unwrap();
        assert!(t.rows.iter().all(|(_, r)| r[0] == 0.5));
        assert_eq!(t.modulus, 0.0);
    }

    #[test]
    fn projection_selection_follows_the_interval_ends() {
        let inst = box_instance(0.01);
        let low = selection(&inst, &[0.0], 0.0).unwrap();
        let high = selection(&inst, &[5.0], 0.0).unwrap();
        for ((x, r), (_, s)) in low.rows.iter().zip(&high.rows) {
            assert!((r[0] - (x[0] / 2.0 - 0.2).max(0.0)).abs() <= 0.01, "{x:?}");
            assert!((s[0] - (x[0] / 2.0 + 0.2).min(1.0)).abs() <= 0.01, "{x:?}");
        }
        assert!(low.modulus < 1.1);
    }

    #[test]
    fn modes_are_ordered() {
        let inst = box_instance(0.01);
        let r = responses(&inst, 0.02).unwrap();
        let o = solve_from(&inst, &r, Mode::Optimistic, &[0.5]).unwrap();
        let s = solve_from(&inst, &r, Mode::Selection, &[0.5]).unwrap();
        let p = solve_from(&inst, &r, Mode::Pessimistic, &[0.5]).unwrap();
        assert!(o.value <= s.value && s.value <= p.value);
        for ((a, b), c) in o.rows.iter().zip(&s.rows).zip(&p.rows) {
            let (a, b, c) = (
                a.inner_value.unwrap(),
                b.inner_value.unwrap(),
                c.inner_value.unwrap(),
            );
            assert!(a <= b && b <= c);
        }
        assert!(s.modulus.is_some());
    }

    #[test]
    fn identity_optimum_is_the_lower_end() {
        let inst = identity_instance(0.05);
        let o = solve(&inst, Mode::Optimistic, &[0.5], 0.0).unwrap();
        assert_eq!(o.value, 0.0);
        assert_eq!(o.x_star[0], 0.0);
    }

    #[test]
    fn table_csv_shape() {
        let inst = identity_instance(0.5);
        let o = solve(&inst, Mode::Optimistic, &[0.5], 0.0).unwrap();
        let csv = o.to_csv(1, 1);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x_1,inner_value,r_y_1,set_size");
        assert_eq!(lines[1], "0,0,0,3");
        assert_eq!(*lines.last().unwrap(), "0,0,0,optimistic");
    }

    #[test]
    fn response_continuity() {
        let opts = CertifyOptions::default();
        let inst = box_instance(1e-3);
        let seqs = response_sequences(&inst, &[0.5], &opts.spec);
        let run = response_lsc_certify(&inst, &[0.5], &seqs, &opts).unwrap();
        assert_eq!(run.certificate.verdict, Verdict::Pass);

        let fam = MapFamily::Singleton(vec![parse("min(y1 + x1, 1)").unwrap()]);
        let h = 1e-4;
        let diag =
            StackelbergInstance::new(unit(h), follower(fam, h), parse("y1").unwrap()).unwrap();
        let seqs = response_sequences(&diag, &[0.0], &opts.spec);
        let run = response_lsc_certify(&diag, &[0.0], &seqs, &opts).unwrap();
        assert_eq!(run.certificate.verdict, Verdict::Fail);
    }

    #[test]
    fn rejects_undeclared_objective_variables() {
        let fam = MapFamily::Singleton(vec![parse("y1").unwrap()]);
        let err =
            StackelbergInstance::new(unit(0.1), follower(fam, 0.1), parse("y1 + u1").unwrap());
        assert!(matches!(err, Err(StackelbergError::Invalid(m)) if m.contains("u1")));
    }
}
