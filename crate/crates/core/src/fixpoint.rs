//! Residuals `d(x, T(x, lambda))`, exact and approximate solution sets on
//! grids, the nested family of approximate sets, and the existence checklist.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::certificate::{CheckResult, HypothesisAudit, Verdict};
use crate::checks::{self, ProbeKind};
use crate::geometry::{dist, Point};
use crate::mapping::{MapError, SetValuedMap};
use crate::sequences::SequenceSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixpointError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("tolerance must be nonnegative, got {0}")]
    NegativeTolerance(f64),
    #[error("epsilon must be nonnegative, got {0}")]
    NegativeEpsilon(f64),
    #[error("epsilon list must be ascending ({0} after {1})")]
    Unsorted(f64, f64),
    #[error("approximate sets not nested: {point} is in the set for {alpha} but not for {beta}")]
    NotNested { alpha: f64, beta: f64, point: Point },
}

/// `d(x, T(x, lambda))`. An empty value gives `+inf`.
pub fn residual(map: &dyn SetValuedMap, x: &[f64], lambda: &[f64]) -> Result<f64, MapError> {
    match map.value(x, lambda) {
        Ok(v) => Ok(v.distance(x)),
        Err(MapError::EmptyValue { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Residuals over every (unmasked) grid point of the map's domain, in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualField {
    pub lambda: Point,
    pub h: f64,
    pub points: Vec<Point>,
    pub residuals: Vec<f64>,
}

impl ResidualField {
    pub fn compute(map: &dyn SetValuedMap, lambda: &[f64]) -> Result<Self, MapError> {
        let points = map.domain().points();
        let residuals = points
            .par_iter()
            .map(|x| residual(map, x, lambda))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            lambda: Point::from(lambda),
            h: map.domain().h(),
            points,
            residuals,
        })
    }

    /// Points with residual `<= epsilon + tol` (`<= tol` without epsilon).
    pub fn threshold(&self, epsilon: Option<f64>, tol: f64) -> SolutionSet {
        let threshold = epsilon.map_or(tol, |e| e + tol);
        let (points, residuals) = self
            .points
            .iter()
            .zip(&self.residuals)
            .filter(|(_, &r)| r <= threshold)
            .map(|(p, &r)| (p.clone(), r))
            .unzip();
        SolutionSet {
            lambda: self.lambda.clone(),
            epsilon,
            points,
            residuals,
            h: self.h,
            tol,
            threshold,
        }
    }
}

/// A finite set of grid points, each with its residual, sorted by coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub lambda: Point,
    pub epsilon: Option<f64>,
    pub points: Vec<Point>,
    pub residuals: Vec<f64>,
    pub h: f64,
    pub tol: f64,
    /// Every listed residual is `<= threshold`.
    pub threshold: f64,
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

impl SolutionSet {
    /// Assembles a set from unsorted points; they are sorted here.
    pub fn from_points(
        lambda: Point,
        epsilon: Option<f64>,
        mut rows: Vec<(Point, f64)>,
        h: f64,
        tol: f64,
        threshold: f64,
    ) -> Self {
        rows.sort_by(|a, b| lex(&a.0, &b.0));
        let (points, residuals) = rows.into_iter().unzip();
        Self {
            lambda,
            epsilon,
            points,
            residuals,
            h,
            tol,
            threshold,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    /// Exact membership of a grid point.
    pub fn contains(&self, p: &[f64]) -> bool {
        self.points.binary_search_by(|q| lex(q, p)).is_ok()
    }

    pub fn is_subset_of(&self, other: &SolutionSet) -> bool {
        self.first_outside(other).is_none()
    }

    /// The first point of `self` missing from `other`.
    pub fn first_outside(&self, other: &SolutionSet) -> Option<&Point> {
        self.points.iter().find(|p| !other.contains(p))
    }

    /// `min_i |x0 - p_i|`; `+inf` for the empty set.
    pub fn distance_to(&self, x0: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| dist(p, x0))
            .fold(f64::INFINITY, f64::min)
    }

    /// The point nearest to `anchor`, the lexicographically smallest on ties.
    pub fn nearest(&self, anchor: &[f64]) -> Option<&Point> {
        let mut best: Option<(&Point, f64)> = None;
        for p in &self.points {
            let d = dist(p, anchor);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((p, d));
            }
        }
        best.map(|(p, _)| p)
    }

    /// One-sided Hausdorff excess `sup_{p in self} d(p, other)`.
    pub fn excess_over(&self, other: &SolutionSet) -> f64 {
        self.points
            .iter()
            .map(|p| other.distance_to(p))
            .fold(0.0, f64::max)
    }

    /// Per-coordinate minimum and maximum.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let k = self.dim()?;
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for p in &self.points {
            for a in 0..k {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((Point::new(lo), Point::new(hi)))
    }

    /// Header `coord_1..coord_N,residual`, one row per point.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut s = String::new();
        let cols: Vec<String> = (1..=dim).map(|i| format!("coord_{i}")).collect();
        let _ = writeln!(s, "{},residual", cols.join(","));
        for (p, r) in self.points.iter().zip(&self.residuals) {
            for c in p.iter() {
                let _ = write!(s, "{c},");
            }
            let _ = writeln!(s, "{r}");
        }
        s
    }
}

fn check_tol(tol: f64) -> Result<(), FixpointError> {
    if tol >= 0.0 {
        Ok(())
    } else {
        Err(FixpointError::NegativeTolerance(tol))
    }
}

/// The default residual tolerance `2 h`.
pub fn default_tol(map: &dyn SetValuedMap) -> f64 {
    2.0 * map.domain().h()
}

/// Grid points with `d(x, T(x, lambda)) <= tol`.
pub fn solution_set(
    map: &dyn SetValuedMap,
    lambda: &[f64],
    tol: f64,
) -> Result<SolutionSet, FixpointError> {
    check_tol(tol)?;
    Ok(ResidualField::compute(map, lambda)?.threshold(None, tol))
}

/// Grid points with `d(x, T(x, lambda)) <= epsilon + tol`.
pub fn approx_solution_set(
    map: &dyn SetValuedMap,
    lambda: &[f64],
    epsilon: f64,
    tol: f64,
) -> Result<SolutionSet, FixpointError> {
    check_tol(tol)?;
    if !(epsilon >= 0.0) {
        return Err(FixpointError::NegativeEpsilon(epsilon));
    }
    Ok(ResidualField::compute(map, lambda)?.threshold(Some(epsilon), tol))
}

/// `E(lambda0, eps)` for each `eps` of an ascending list, from one residual
/// field, checked to be nested.
pub fn q_family(
    map: &dyn SetValuedMap,
    lambda0: &[f64],
    epsilons: &[f64],
    tol: f64,
) -> Result<Vec<SolutionSet>, FixpointError> {
    check_tol(tol)?;
    for w in epsilons.windows(2) {
        if w[1] < w[0] {
            return Err(FixpointError::Unsorted(w[1], w[0]));
        }
    }
    if let Some(&e) = epsilons.iter().find(|e| !(**e >= 0.0)) {
        return Err(FixpointError::NegativeEpsilon(e));
    }
    let field = ResidualField::compute(map, lambda0)?;
    let family: Vec<SolutionSet> = epsilons
        .iter()
        .map(|&e| field.threshold(Some(e), tol))
        .collect();
    for (a, b) in family.iter().zip(family.iter().skip(1)) {
        if let Some(p) = a.first_outside(b) {
            return Err(FixpointError::NotNested {
                alpha: a.epsilon.unwrap_or(0.0),
                beta: b.epsilon.unwrap_or(0.0),
                point: p.clone(),
            });
        }
    }
    Ok(family)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport {
    pub audit: HypothesisAudit,
    pub solution: SolutionSet,
    /// Every hypothesis passes and the computed set is nonempty.
    pub existence_claimed: bool,
}

impl ExistenceReport {
    pub fn verdict(&self) -> Verdict {
        self.audit.verdict()
    }
}

/// Compactness and convexity of the domain, nonempty convex values inside
/// the domain, upper semicontinuity in `x` at sampled points, and whether the
/// computed solution set is nonempty.
pub fn existence_report(
    map: &dyn SetValuedMap,
    lambda: &[f64],
    tol: f64,
    spec: &SequenceSpec,
) -> Result<ExistenceReport, FixpointError> {
    let solution = solution_set(map, lambda, tol)?;
    let mut audit = HypothesisAudit::new("existence");
    audit.push(checks::domain_check(map.domain()));
    audit.push(checks::shape_check(map, lambda));
    audit.push(checks::range_check(map));
    let (usc, probes) =
        checks::continuity_check(map, lambda, spec, ProbeKind::Usc, (true, false), "map_usc");
    audit.push(usc);
    audit.probes = probes;
    let hypotheses_ok = audit.fully_passes();
    let nonempty = if !solution.is_empty() {
        CheckResult::new(
            "solution_nonempty",
            Verdict::Pass,
            format!("{} grid points", solution.len()),
        )
    } else if hypotheses_ok {
        CheckResult::new(
            "solution_nonempty",
            Verdict::Inconclusive,
            "hypotheses pass but the grid solution set is empty; refine the grid",
        )
    } else {
        CheckResult::new(
            "solution_nonempty",
            Verdict::Fail,
            "empty solution set; existence not claimed",
        )
    };
    audit.push(nonempty);
    Ok(ExistenceReport {
        existence_claimed: hypotheses_ok && !solution.is_empty(),
        audit,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, ConvexSet};
    use crate::mapping::fixtures::{diagonal, example31};
    use crate::mapping::{GridDomain, MapFamily, SetValuedMapDef};

    const CORRECTED: &str = "2*x1 - x1^2";

    #[test]
    fn residual_examples() {
        let t = example31(CORRECTED, 1e-3);
        assert_eq!(residual(&t, &[1.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(residual(&t, &[0.0], &[0.0]).unwrap(), 1.0);
        let d = diagonal(0.01);
        assert_eq!(residual(&d, &[1.0], &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn example31_solution_set_matches_the_analytic_interval() {
        let h = 1e-3;
        let t = example31(CORRECTED, h);
        let s = solution_set(&t, &[0.0], 2.0 * h).unwrap();
        // |x - 1| <= sqrt(2x - x^2)  <=>  2x^2 - 4x + 1 <= 0
        let (a, b) = (1.0 - 0.5f64.sqrt(), 1.0 + 0.5f64.sqrt());
        let (lo, hi) = s.bounds().unwrap();
        assert!((lo[0] - a).abs() <= 2.0 * h, "{}", lo[0]);
        assert!((hi[0] - b).abs() <= 2.0 * h, "{}", hi[0]);
        // contiguous on the grid
        let n = ((hi[0] - lo[0]) / h).round() as usize + 1;
        assert_eq!(s.len(), n);
    }

    #[test]
    fn diagonal_solution_sets() {
        let t = diagonal(0.01);
        let s = solution_set(&t, &[0.0], 0.02).unwrap();
        assert_eq!(s.len(), t.domain().points().len());
        let s = solution_set(&t, &[0.1], 0.0).unwrap();
        assert_eq!(s.points, vec![Point::new(vec![1.0])]);
        let e = approx_solution_set(&t, &[0.1], 0.1, 0.02).unwrap();
        assert_eq!(e.len(), t.domain().points().len());
    }

    #[test]
    fn zero_epsilon_reproduces_the_exact_set() {
        let t = example31(CORRECTED, 1e-2);
        for l in [-0.5, 0.0, 0.7] {
            let s = solution_set(&t, &[l], 0.02).unwrap();
            let e = approx_solution_set(&t, &[l], 0.0, 0.02).unwrap();
            assert_eq!(s.points, e.points);
            assert_eq!(s.residuals, e.residuals);
            assert_eq!(s.threshold, e.threshold);
        }
    }

    #[test]
    fn q_family_is_nested_and_checked() {
        let t = example31(CORRECTED, 1e-3);
        let fam = q_family(&t, &[0.0], &[0.0, 0.05, 0.1], 2e-3).unwrap();
        assert!(fam[0].is_subset_of(&fam[1]) && fam[1].is_subset_of(&fam[2]));
        assert!(fam[0].len() < fam[2].len());
        assert!(matches!(
            q_family(&t, &[0.0], &[0.1, 0.0], 2e-3),
            Err(FixpointError::Unsorted(..))
        ));
    }

    #[test]
    fn ball_q_family_is_an_inflated_ball() {
        let dom = GridDomain::new([0.0, 0.0], [1.0, 1.0], 0.05).unwrap();
        let t = SetValuedMapDef::new(
            MapFamily::Constant(ConvexSet::ball([0.5, 0.5], 0.2).unwrap()),
            dom,
            AxisBox::new([0.0], [1.0]).unwrap(),
        )
        .unwrap();
        let eps = [0.0, 0.1];
        let fam = q_family(&t, &[0.0], &eps, 0.0).unwrap();
        for (s, e) in fam.iter().zip(eps) {
            for x in t.domain().points() {
                let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
                // skip points within rounding of the sphere
                if (d - 0.2 - e).abs() > 1e-9 {
                    assert_eq!(s.contains(&x), d <= 0.2 + e, "x = {x:?}, eps = {e}");
                }
            }
        }
    }

    #[test]
    fn existence_reports() {
        let t = example31(CORRECTED, 1e-2);
        let r = existence_report(&t, &[0.0], 0.02, &SequenceSpec::default()).unwrap();
        assert!(r.existence_claimed, "{:?}", r.audit.report_lines());
        assert_eq!(r.verdict(), Verdict::Pass);

        let t = example31("x1^2 + 2*x1", 1e-2);
        let r = existence_report(&t, &[0.0], 0.02, &SequenceSpec::default()).unwrap();
        assert_eq!(r.audit.get("range_containment"), Some(Verdict::Fail));
        assert!(!r.existence_claimed);
    }

    #[test]
    fn csv_layout() {
        let t = diagonal(0.5);
        let s = solution_set(&t, &[0.0], 0.0).unwrap();
        assert_eq!(s.to_csv(1), "coord_1,residual\n0,0\n0.5,0\n1,0\n");
    }

    #[test]
    fn nearest_breaks_ties_lexicographically() {
        let t = diagonal(0.5);
        let s = solution_set(&t, &[0.0], 0.0).unwrap();
        assert_eq!(s.nearest(&[0.25]).unwrap()[0], 0.0);
        assert_eq!(s.distance_to(&[0.25]), 0.25);
        let clamp_only = solution_set(&t, &[0.3], 0.0).unwrap();
        assert_eq!(clamp_only.len(), 1);
    }
}
