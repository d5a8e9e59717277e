//! Verdicts, distance-curve classification and the certificate records shared
//! by every probe and certifier in the crate.

use std::fmt;

use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Vacuous,
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Vacuous => "vacuous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pass" => Some(Verdict::Pass),
            "fail" => Some(Verdict::Fail),
            "inconclusive" => Some(Verdict::Inconclusive),
            "vacuous" => Some(Verdict::Vacuous),
            _ => None,
        }
    }

    /// Fail dominates Inconclusive, which dominates Pass, which dominates Vacuous.
    pub fn combine(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    /// The aggregate of a collection; empty input is Inconclusive.
    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        verdicts
            .into_iter()
            .reduce(Verdict::combine)
            .unwrap_or(Verdict::Inconclusive)
    }

    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Vacuous)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a pass is recognized on a curve `d_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PassRule {
    /// `d_n <= c 2^{-(n - n_0) rho} + tol` on the second half of the curve,
    /// where `c` is the smallest constant covering the first half.
    Envelope { rho: f64 },
    /// The last `window` values are all `<= tol`.
    Tail,
}

/// Three-valued classification of a distance curve along a sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRule {
    pub pass: PassRule,
    pub tol: f64,
    /// Values above this across the whole tail window, without decaying, are a plateau.
    pub plateau: f64,
    pub window: usize,
}

impl DecayRule {
    /// Envelope rule with `rho = 0.5` and `tol = plateau = 10 h`.
    pub fn envelope(h: f64) -> Self {
        Self {
            pass: PassRule::Envelope { rho: 0.5 },
            tol: 10.0 * h,
            plateau: 10.0 * h,
            window: 4,
        }
    }

    /// Tail rule with `tol = plateau = 10 h`.
    pub fn tail(h: f64) -> Self {
        Self {
            pass: PassRule::Tail,
            tol: 10.0 * h,
            plateau: 10.0 * h,
            window: 4,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        if let PassRule::Envelope { .. } = self.pass {
            self.pass = PassRule::Envelope { rho };
        }
        self
    }

    /// Classifies `d` (indexed by `ns`). Returns the verdict and, for a
    /// failure, the plateau level (minimum over the tail window).
    pub fn classify(&self, ns: &[usize], d: &[f64]) -> (Verdict, Option<f64>) {
        debug_assert_eq!(ns.len(), d.len());
        if d.is_empty() {
            return (Verdict::Inconclusive, None);
        }
        let w = self.window.min(d.len()).max(1);
        let tail = &d[d.len() - w..];
        let passed = match self.pass {
            PassRule::Tail => tail.iter().all(|&v| v <= self.tol),
            PassRule::Envelope { rho } => envelope_holds(ns, d, rho, self.tol),
        };
        if passed {
            return (Verdict::Pass, None);
        }
        let high = tail.iter().all(|&v| v > self.plateau);
        let (first, last) = (tail[0], tail[w - 1]);
        let flat = !first.is_finite() || !last.is_finite() || last >= 0.5 * first;
        if high && flat {
            let level = tail.iter().copied().fold(f64::INFINITY, f64::min);
            return (Verdict::Fail, Some(level));
        }
        (Verdict::Inconclusive, None)
    }
}

fn envelope_holds(ns: &[usize], d: &[f64], rho: f64, tol: f64) -> bool {
    if d.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let n0 = ns[0] as f64;
    let head = d.len().div_ceil(2);
    let scale = |n: usize| (2f64).powf((n as f64 - n0) * rho);
    let c = (0..head).map(|i| d[i] * scale(ns[i])).fold(0.0, f64::max);
    (head..d.len()).all(|i| d[i] <= c / scale(ns[i]) + tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    SolutionMap,
    ApproxMap,
    ResponseMap,
    M1Map,
    M2Map,
    MapLsc,
    MapUsc,
    MapHlsc,
    WeakInclusion,
    StrictInclusion,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::SolutionMap => "solution_map",
            Target::ApproxMap => "approx_map",
            Target::ResponseMap => "response_map",
            Target::M1Map => "m1_map",
            Target::M2Map => "m2_map",
            Target::MapLsc => "map_lsc",
            Target::MapUsc => "map_usc",
            Target::MapHlsc => "map_hlsc",
            Target::WeakInclusion => "c_inclusion",
            Target::StrictInclusion => "strict_c_inclusion",
        }
    }
}

/// One step of a converging sequence: its index `n`, the parameter point and,
/// for approximate-set certificates, the tolerance `epsilon_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub n: usize,
    pub param: Point,
    pub epsilon: Option<f64>,
}

/// A finite sequence converging to an anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub id: usize,
    pub direction: Vec<f64>,
    pub steps: Vec<Step>,
}

impl Sequence {
    pub fn ns(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.n).collect()
    }
}

/// Evidence for one (witness, sequence) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessRecord {
    pub witness_id: usize,
    pub witness: Point,
    pub seq_id: usize,
    pub steps: Vec<Step>,
    pub distances: Vec<f64>,
    pub verdict: Verdict,
    pub plateau: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Anchor {
    pub param: Point,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, verdict: Verdict, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            verdict,
            detail: detail.into(),
        }
    }
}

/// Per-hypothesis verdicts, each backed by a probe or check.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct HypothesisAudit {
    pub name: String,
    pub checks: Vec<CheckResult>,
    /// Probe certificates that back some of the checks.
    pub probes: Vec<Certificate>,
}

impl HypothesisAudit {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<Verdict> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.verdict)
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::all(self.checks.iter().map(|c| c.verdict))
    }

    pub fn fully_passes(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.verdict.is_ok())
    }

    /// `audit.check=verdict` lines.
    pub fn report_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{}.{}={}", self.name, c.name, c.verdict))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub target: Target,
    pub anchor: Anchor,
    pub records: Vec<WitnessRecord>,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub audit: Option<HypothesisAudit>,
}

impl Certificate {
    /// Aggregates records; no records means Inconclusive.
    pub fn from_records(target: Target, anchor: Anchor, mut records: Vec<WitnessRecord>) -> Self {
        records.sort_by_key(|r| (r.witness_id, r.seq_id));
        let verdict = Verdict::all(records.iter().map(|r| r.verdict));
        let reason = records
            .is_empty()
            .then(|| "no usable witness or sequence".to_string());
        Self {
            target,
            anchor,
            records,
            verdict,
            reason,
            audit: None,
        }
    }

    pub fn inconclusive(target: Target, anchor: Anchor, reason: impl Into<String>) -> Self {
        Self {
            target,
            anchor,
            records: Vec::new(),
            verdict: Verdict::Inconclusive,
            reason: Some(reason.into()),
            audit: None,
        }
    }

    pub fn with_audit(mut self, audit: HypothesisAudit) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &WitnessRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail)
    }
}
