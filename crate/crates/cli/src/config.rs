//! Run configuration: instance, anchors, tolerances, sequences, output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use svfix::certifier::CertifyOptions;
use svfix::expr::{parse as parse_expr, Expr};
use svfix::geometry::{AxisBox, ConvexSet, Point};
use svfix::mapping::{GridDomain, MapFamily, SetValuedMapDef};
use svfix::quasieq::{ConeDef, QuasiEqInstance, Which, DEFAULT_MU};
use svfix::sequences::SequenceSpec;
use svfix::stackelberg::StackelbergInstance;
use svfix::Verdict;

use crate::ini::{self, Document, Positioned};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Pfpp,
    Stackelberg,
    QuasiEq,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Pfpp => "pfpp",
            Kind::Stackelberg => "stackelberg",
            Kind::QuasiEq => "quasieq",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pfpp" => Some(Kind::Pfpp),
            "stackelberg" => Some(Kind::Stackelberg),
            "quasieq" => Some(Kind::QuasiEq),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Pfpp {
        map: SetValuedMapDef,
        lambda0: Vec<f64>,
        epsilon0: Option<f64>,
    },
    Stackelberg {
        inst: StackelbergInstance,
        x0: Vec<f64>,
        selection: Vec<f64>,
    },
    QuasiEq {
        inst: QuasiEqInstance,
        u0: Vec<f64>,
        lambda0: Vec<f64>,
        which: Vec<Which>,
    },
}

impl Instance {
    pub fn kind(&self) -> Kind {
        match self {
            Instance::Pfpp { .. } => Kind::Pfpp,
            Instance::Stackelberg { .. } => Kind::Stackelberg,
            Instance::QuasiEq { .. } => Kind::QuasiEq,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub instance: Instance,
    pub opts: CertifyOptions,
    pub output_dir: Option<PathBuf>,
    /// Expected overall verdict per subcommand, used by `corpus`.
    pub expect: BTreeMap<String, Verdict>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Positioned>),
}

impl ConfigError {
    pub fn messages(&self) -> Vec<String> {
        match self {
            ConfigError::Io { .. } => vec![self.to_string()],
            ConfigError::Invalid(v) => v.iter().map(|p| p.to_string()).collect(),
        }
    }
}

pub const SUBCOMMANDS: [&str; 5] = ["solve", "certify", "audit", "stackelberg", "quasieq"];

fn allowed_sections(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Pfpp => &[
            "instance",
            "domain",
            "params",
            "map",
            "anchor",
            "tolerances",
            "sequences",
            "output",
            "expect",
        ],
        Kind::Stackelberg => &[
            "instance",
            "leader",
            "domain",
            "map",
            "objective",
            "anchor",
            "tolerances",
            "sequences",
            "output",
            "expect",
        ],
        Kind::QuasiEq => &[
            "instance",
            "domain",
            "params",
            "map",
            "bifunction",
            "cone",
            "omega",
            "anchor",
            "tolerances",
            "sequences",
            "output",
            "expect",
        ],
    }
}

fn allowed_keys(kind: Kind, section: &str, family: Option<&str>, set: Option<&str>) -> Vec<String> {
    let v: &[&str] = match section {
        "instance" => &["kind", "name", "seed"],
        "domain" => &["lo", "hi", "h", "mask"],
        "params" | "omega" => &["lo", "hi"],
        "leader" => &["lo", "hi", "h"],
        "objective" => &["f"],
        "cone" => &["normals", "orthant", "mu"],
        "tolerances" => &["tol", "eta", "max_witnesses"],
        "sequences" => &["depth", "random_directions", "min_steps"],
        "output" => &["dir"],
        "expect" => &SUBCOMMANDS,
        "anchor" => match kind {
            Kind::Pfpp => &["lambda", "epsilon"],
            Kind::Stackelberg => &["x0", "selection"],
            Kind::QuasiEq => &["u", "lambda", "which"],
        },
        "map" => {
            let mut keys = vec!["family".to_string(), "clamp".to_string()];
            let extra: &[&str] = match family {
                Some("box") => &["lo", "hi"],
                Some("ball") => &["center", "radius"],
                Some("singleton") => &["value"],
                Some("constant") => match set {
                    Some("box") => &["set", "set_lo", "set_hi"],
                    Some("ball") => &["set", "set_center", "set_radius"],
                    Some("segment") => &["set", "set_p", "set_q"],
                    Some("vpolytope") => &["set", "vertices"],
                    _ => &["set"],
                },
                _ => &[],
            };
            keys.extend(extra.iter().map(|s| s.to_string()));
            return keys;
        }
        // f1, f2, ... are checked separately
        "bifunction" => &[],
        _ => &[],
    };
    v.iter().map(|s| s.to_string()).collect()
}

/// `{prefix}{k}` with `1 <= k <= n`.
fn indexed(name: &str, prefix: &str, n: usize) -> bool {
    name.strip_prefix(prefix)
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0'))
        .and_then(|d| d.parse::<usize>().ok())
        .is_some_and(|k| k >= 1 && k <= n)
}

/// Variable scope: (prefix, dimension) pairs.
type Scope<'a> = &'a [(&'a str, usize)];

fn scope_names(scope: Scope) -> String {
    scope
        .iter()
        .map(|(p, n)| {
            if *n == 1 {
                format!("{p}1")
            } else {
                format!("{p}1..{p}{n}")
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

struct Reader<'a> {
    doc: &'a Document,
    errors: Vec<Positioned>,
}

impl<'a> Reader<'a> {
    fn err(&mut self, line: usize, msg: impl Into<String>) {
        self.errors.push(Positioned {
            line,
            msg: msg.into(),
        });
    }

    fn section_line(&self, sec: &str) -> usize {
        self.doc.sections.get(sec).map_or(0, |s| s.line)
    }

    fn raw(&mut self, sec: &str, key: &str, required: bool) -> Option<(usize, &'a str)> {
        let doc = self.doc;
        match doc.sections.get(sec).and_then(|s| s.entries.get(key)) {
            Some(e) => Some((e.line, e.value.as_str())),
            None => {
                if required {
                    let line = self.section_line(sec);
                    if doc.sections.contains_key(sec) {
                        self.err(line, format!("[{sec}] missing required key `{key}`"));
                    } else {
                        self.err(
                            0,
                            format!("missing required section [{sec}] (needs `{key}`)"),
                        );
                    }
                }
                None
            }
        }
    }

    fn word(&mut self, sec: &str, key: &str, required: bool) -> Option<(usize, String)> {
        let (line, v) = self.raw(sec, key, required)?;
        Some((line, ini::unquote(v).unwrap_or(v).to_string()))
    }

    fn num_at(&mut self, line: usize, sec: &str, key: &str, s: &str) -> Option<f64> {
        match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.err(line, format!("[{sec}] {key}: `{s}` is not a finite number"));
                None
            }
        }
    }

    fn num(&mut self, sec: &str, key: &str, required: bool) -> Option<f64> {
        let (line, v) = self.raw(sec, key, required)?;
        self.num_at(line, sec, key, v)
    }

    fn count(&mut self, sec: &str, key: &str) -> Option<usize> {
        let (line, v) = self.raw(sec, key, false)?;
        match v.parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => {
                self.err(
                    line,
                    format!("[{sec}] {key}: `{v}` is not a nonnegative integer"),
                );
                None
            }
        }
    }

    fn nums(&mut self, sec: &str, key: &str, required: bool) -> Option<(usize, Vec<f64>)> {
        let (line, v) = self.raw(sec, key, required)?;
        let parts = ini::split_list(v);
        if parts.is_empty() {
            self.err(line, format!("[{sec}] {key}: empty list"));
            return None;
        }
        let vals: Vec<Option<f64>> = parts
            .iter()
            .map(|p| self.num_at(line, sec, key, p))
            .collect();
        vals.into_iter()
            .collect::<Option<Vec<_>>>()
            .map(|v| (line, v))
    }

    /// Rows separated by `;`, entries by `,`.
    fn rows(&mut self, sec: &str, key: &str, required: bool) -> Option<(usize, Vec<Vec<f64>>)> {
        let (line, v) = self.raw(sec, key, required)?;
        let v = ini::unquote(v).unwrap_or(v);
        let mut out = Vec::new();
        let mut ok = true;
        for row in v.split(';') {
            let r: Vec<Option<f64>> = row
                .split(',')
                .map(|p| self.num_at(line, sec, key, p))
                .collect();
            match r.into_iter().collect::<Option<Vec<_>>>() {
                Some(r) => out.push(r),
                None => ok = false,
            }
        }
        if ok && out.windows(2).any(|w| w[0].len() != w[1].len()) {
            self.err(line, format!("[{sec}] {key}: rows have different lengths"));
            ok = false;
        }
        ok.then_some((line, out))
    }

    fn expr_at(
        &mut self,
        line: usize,
        sec: &str,
        key: &str,
        s: &str,
        scope: Scope,
    ) -> Option<Expr> {
        let Some(body) = ini::unquote(s) else {
            self.err(
                line,
                format!("[{sec}] {key}: expressions must be double-quoted, found `{s}`"),
            );
            return None;
        };
        let e = match parse_expr(body) {
            Ok(e) => e,
            Err(err) => {
                self.err(line, format!("[{sec}] {key}: {err}"));
                return None;
            }
        };
        let bad: Vec<String> = e
            .free_vars()
            .into_iter()
            .filter(|v| !scope.iter().any(|(p, n)| indexed(v, p, *n)))
            .collect();
        for v in &bad {
            self.err(
                line,
                format!(
                    "[{sec}] {key}: undeclared variable `{v}` (declared: {})",
                    scope_names(scope)
                ),
            );
        }
        bad.is_empty().then_some(e)
    }

    fn expr(&mut self, sec: &str, key: &str, scope: Scope) -> Option<Expr> {
        let (line, v) = self.raw(sec, key, true)?;
        self.expr_at(line, sec, key, v, scope)
    }

    fn exprs(
        &mut self,
        sec: &str,
        key: &str,
        scope: Scope,
        len: Option<usize>,
    ) -> Option<Vec<Expr>> {
        let (line, v) = self.raw(sec, key, true)?;
        let parts = ini::split_list(v);
        if let Some(n) = len {
            if parts.len() != n {
                self.err(
                    line,
                    format!(
                        "[{sec}] {key}: expected {n} expression(s), found {}",
                        parts.len()
                    ),
                );
                return None;
            }
        }
        let es: Vec<Option<Expr>> = parts
            .iter()
            .map(|p| self.expr_at(line, sec, key, p, scope))
            .collect();
        es.into_iter().collect()
    }

    fn flag(&mut self, sec: &str, key: &str) -> bool {
        match self.raw(sec, key, false) {
            None => false,
            Some((_, "true")) => true,
            Some((_, "false")) => false,
            Some((line, v)) => {
                self.err(
                    line,
                    format!("[{sec}] {key}: expected true or false, found `{v}`"),
                );
                false
            }
        }
    }

    fn axis_box(&mut self, sec: &str) -> Option<AxisBox> {
        let lo = self.nums(sec, "lo", true);
        let hi = self.nums(sec, "hi", true);
        let ((line, lo), (_, hi)) = (lo?, hi?);
        if lo.len() != hi.len() {
            self.err(
                line,
                format!(
                    "[{sec}] lo has {} coordinates but hi has {}",
                    lo.len(),
                    hi.len()
                ),
            );
            return None;
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            self.err(
                line,
                format!(
                    "[{sec}] empty box: lo{} = {} > hi{} = {}",
                    i + 1,
                    lo[i],
                    i + 1,
                    hi[i]
                ),
            );
            return None;
        }
        match AxisBox::new(lo, hi) {
            Ok(b) => Some(b),
            Err(e) => {
                self.err(line, format!("[{sec}] {e}"));
                None
            }
        }
    }

    fn grid(&mut self, sec: &str) -> Option<GridDomain> {
        let bx = self.axis_box(sec);
        let h = match self.raw(sec, "h", true) {
            Some((line, v)) => match self.num_at(line, sec, "h", v) {
                Some(h) if h > 0.0 => Some(h),
                Some(_) => {
                    self.err(
                        line,
                        format!("[{sec}] h: resolution must be positive, got {v}"),
                    );
                    None
                }
                None => None,
            },
            None => None,
        };
        let (bx, h) = (bx?, h?);
        let n = bx.dim();
        let mask = match self.raw(sec, "mask", false) {
            Some((line, v)) => Some(self.expr_at(line, sec, "mask", v, &[("x", n)])?),
            None => None,
        };
        let g = GridDomain::new(bx.lo().clone(), bx.hi().clone(), h);
        let g = g.and_then(|g| match mask {
            Some(m) => g.with_mask(m),
            None => Ok(g),
        });
        match g {
            Ok(g) => Some(g),
            Err(e) => {
                let line = self.section_line(sec);
                self.err(line, format!("[{sec}] {e}"));
                None
            }
        }
    }

    fn constant_set(&mut self, n: usize) -> Option<ConvexSet> {
        let (line, set) = self.word("map", "set", true)?;
        let pt = |r: &mut Self, key: &str| -> Option<Vec<f64>> {
            let (l, v) = r.nums("map", key, true)?;
            if v.len() != n {
                r.err(
                    l,
                    format!("[map] {key}: expected {n} coordinate(s), found {}", v.len()),
                );
                return None;
            }
            Some(v)
        };
        let made = match set.as_str() {
            "box" => {
                let (lo, hi) = (pt(self, "set_lo"), pt(self, "set_hi"));
                ConvexSet::boxed(lo?, hi?)
            }
            "ball" => {
                let c = pt(self, "set_center");
                let r = self.num("map", "set_radius", true);
                ConvexSet::ball(c?, r?)
            }
            "segment" => {
                let (p, q) = (pt(self, "set_p"), pt(self, "set_q"));
                ConvexSet::segment(p?, q?)
            }
            "vpolytope" => {
                let (l, rows) = self.rows("map", "vertices", true)?;
                if rows.iter().any(|r| r.len() != n) {
                    self.err(
                        l,
                        format!("[map] vertices: each vertex needs {n} coordinate(s)"),
                    );
                    return None;
                }
                ConvexSet::vpolytope(rows.into_iter().map(Point::new).collect())
            }
            other => {
                self.err(
                    line,
                    format!("[map] set: unknown set `{other}` (box, ball, segment, vpolytope)"),
                );
                return None;
            }
        };
        match made {
            Ok(s) => Some(s),
            Err(e) => {
                self.err(line, format!("[map] {e}"));
                None
            }
        }
    }

    /// The `[map]` family over the argument and parameter scopes.
    fn family(&mut self, n: usize, scope: Scope) -> Option<MapFamily> {
        let (line, fam) = self.word("map", "family", true)?;
        match fam.as_str() {
            "box" => {
                let lo = self.exprs("map", "lo", scope, Some(n));
                let hi = self.exprs("map", "hi", scope, Some(n));
                Some(MapFamily::IntervalBox { lo: lo?, hi: hi? })
            }
            "ball" => {
                let center = self.exprs("map", "center", scope, Some(n));
                let radius = self.expr("map", "radius", scope);
                Some(MapFamily::Ball {
                    center: center?,
                    radius: radius?,
                })
            }
            "singleton" => Some(MapFamily::Singleton(self.exprs(
                "map",
                "value",
                scope,
                Some(n),
            )?)),
            "constant" => Some(MapFamily::Constant(self.constant_set(n)?)),
            other => {
                self.err(
                    line,
                    format!(
                        "[map] family: unknown family `{other}` (box, ball, singleton, constant)"
                    ),
                );
                None
            }
        }
    }

    /// Dimension of a box section, read from `lo` when the box itself is invalid
    /// so later sections are still checked.
    fn dim_hint(&mut self, sec: &str, built: Option<usize>) -> Option<usize> {
        built.or_else(|| self.nums(sec, "lo", true).map(|(_, v)| v.len()))
    }

    fn map_def(
        &mut self,
        domain: Option<GridDomain>,
        params: Option<AxisBox>,
        (n, p): (usize, usize),
        arg: &str,
        par: &str,
    ) -> Option<SetValuedMapDef> {
        let fam = self.family(n, &[(arg, n), (par, p)]);
        let clamp = self.flag("map", "clamp");
        match SetValuedMapDef::with_prefixes(fam?, domain?, params?, arg, par) {
            Ok(m) => Some(m.clamped(clamp)),
            Err(e) => {
                let line = self.section_line("map");
                self.err(line, format!("[map] {e}"));
                None
            }
        }
    }

    fn point(&mut self, sec: &str, key: &str, dim: usize, required: bool) -> Option<Vec<f64>> {
        let (line, v) = self.nums(sec, key, required)?;
        if v.len() != dim {
            self.err(
                line,
                format!(
                    "[{sec}] {key}: expected {dim} coordinate(s), found {}",
                    v.len()
                ),
            );
            return None;
        }
        Some(v)
    }

    fn within(&mut self, sec: &str, key: &str, p: &[f64], bx: &AxisBox, what: &str) -> bool {
        if bx.contains(p, 1e-12) {
            return true;
        }
        let line = self
            .doc
            .sections
            .get(sec)
            .and_then(|s| s.entries.get(key))
            .map_or(0, |e| e.line);
        self.err(
            line,
            format!("[{sec}] {key}: anchor lies outside the {what}"),
        );
        false
    }
}

fn check_keys(r: &mut Reader, kind: Kind) {
    let doc = r.doc;
    let family = doc
        .sections
        .get("map")
        .and_then(|s| s.entries.get("family"))
        .map(|e| e.value.as_str());
    let set = doc
        .sections
        .get("map")
        .and_then(|s| s.entries.get("set"))
        .map(|e| e.value.as_str());
    for (name, sec) in &doc.sections {
        if !allowed_sections(kind).contains(&name.as_str()) {
            r.err(
                sec.line,
                format!("unknown section [{name}] for kind {}", kind.as_str()),
            );
            continue;
        }
        let keys = allowed_keys(kind, name, family, set);
        for (k, e) in &sec.entries {
            let ok = if name == "bifunction" {
                indexed(k, "f", usize::MAX)
            } else {
                keys.iter().any(|a| a == k)
            };
            if !ok {
                r.err(e.line, format!("[{name}] unknown key `{k}`"));
            }
        }
    }
}

fn pfpp(r: &mut Reader) -> Option<Instance> {
    let domain = r.grid("domain");
    let params = r.axis_box("params");
    let n = r.dim_hint("domain", domain.as_ref().map(GridDomain::dim));
    let p = r.dim_hint("params", params.as_ref().map(AxisBox::dim));
    let (n, p) = (n?, p?);
    let lambda0 = r.point("anchor", "lambda", p, true);
    let epsilon0 = match r.raw("anchor", "epsilon", false) {
        Some((line, v)) => match r.num_at(line, "anchor", "epsilon", v) {
            Some(e) if e >= 0.0 => Some(Some(e)),
            Some(_) => {
                r.err(line, "[anchor] epsilon: must be nonnegative");
                None
            }
            None => None,
        },
        None => Some(None),
    };
    let map = r.map_def(domain, params.clone(), (n, p), "x", "l");
    let (lambda0, params) = (lambda0?, params?);
    if !r.within("anchor", "lambda", &lambda0, &params, "parameter box") {
        return None;
    }
    Some(Instance::Pfpp {
        map: map?,
        lambda0,
        epsilon0: epsilon0?,
    })
}

fn stackelberg(r: &mut Reader) -> Option<Instance> {
    let leader = r.grid("leader");
    let domain = r.grid("domain");
    let n1 = r.dim_hint("leader", leader.as_ref().map(GridDomain::dim));
    let n2 = r.dim_hint("domain", domain.as_ref().map(GridDomain::dim));
    let (n1, n2) = (n1?, n2?);
    let f = r.expr("objective", "f", &[("x", n1), ("y", n2)]);
    let x0 = r.point("anchor", "x0", n1, true);
    let sel = r.point("anchor", "selection", n2, true);
    let follower = r.map_def(
        domain,
        leader.as_ref().map(|l| l.bx().clone()),
        (n2, n1),
        "y",
        "x",
    );
    let (x0, selection, leader) = (x0?, sel?, leader?);
    if !r.within("anchor", "x0", &x0, leader.bx(), "leader box") {
        return None;
    }
    match StackelbergInstance::new(leader, follower?, f?) {
        Ok(inst) => Some(Instance::Stackelberg {
            inst,
            x0,
            selection,
        }),
        Err(e) => {
            r.err(0, e.to_string());
            None
        }
    }
}

fn cone(r: &mut Reader) -> Option<ConeDef> {
    let mu = match r.num("cone", "mu", false) {
        Some(m) if m > 0.0 => m,
        Some(_) => {
            let line = r.section_line("cone");
            r.err(line, "[cone] mu: must be positive");
            return None;
        }
        None => DEFAULT_MU,
    };
    let made = match (r.count("cone", "orthant"), r.rows("cone", "normals", false)) {
        (Some(m), None) => ConeDef::orthant(m, mu),
        (None, Some((_, rows))) => ConeDef::new(rows, mu),
        _ => {
            let line = r.section_line("cone");
            r.err(line, "[cone] give exactly one of `orthant` or `normals`");
            return None;
        }
    };
    match made {
        Ok(c) => Some(c),
        Err(e) => {
            let line = r.section_line("cone");
            r.err(line, format!("[cone] {e}"));
            None
        }
    }
}

fn quasieq(r: &mut Reader) -> Option<Instance> {
    let domain = r.grid("domain");
    let params = r.axis_box("params");
    let omega = r.axis_box("omega");
    let cone = cone(r);
    let n = r.dim_hint("domain", domain.as_ref().map(GridDomain::dim));
    let p = r.dim_hint("params", params.as_ref().map(AxisBox::dim));
    let q = r.dim_hint("omega", omega.as_ref().map(AxisBox::dim));
    let (n, p, q) = (n?, p?, q?);
    let m = cone.as_ref().map(|c| c.dim());
    let mut keys: Vec<(usize, String)> = r
        .doc
        .sections
        .get("bifunction")
        .map(|s| {
            s.entries
                .keys()
                .filter(|k| indexed(k, "f", usize::MAX))
                .map(|k| (k[1..].parse().unwrap(), k.clone()))
                .collect()
        })
        .unwrap_or_default();
    keys.sort();
    if keys.is_empty() {
        let line = r.section_line("bifunction");
        r.err(line, "[bifunction] needs at least one value vector f1");
    }
    if keys.iter().enumerate().any(|(i, (k, _))| *k != i + 1) {
        let line = r.section_line("bifunction");
        r.err(
            line,
            "[bifunction] value vectors must be numbered f1, f2, ... without gaps",
        );
    }
    let f: Vec<Option<Vec<Expr>>> = keys
        .iter()
        .map(|(_, k)| r.exprs("bifunction", k, &[("x", n), ("y", n), ("u", q)], m))
        .collect();
    let u0 = r.point("anchor", "u", q, true);
    let lambda0 = r.point("anchor", "lambda", p, true);
    let which = match r.word("anchor", "which", false) {
        None => Some(vec![Which::M1, Which::M2]),
        Some((_, w)) if w == "both" => Some(vec![Which::M1, Which::M2]),
        Some((_, w)) if w == "m1" => Some(vec![Which::M1]),
        Some((_, w)) if w == "m2" => Some(vec![Which::M2]),
        Some((line, w)) => {
            r.err(
                line,
                format!("[anchor] which: expected m1, m2 or both, found `{w}`"),
            );
            None
        }
    };
    let k = r.map_def(domain, params.clone(), (n, p), "x", "l");
    let f: Option<Vec<Vec<Expr>>> = f.into_iter().collect();
    let (u0, lambda0, params, omega) = (u0?, lambda0?, params?, omega?);
    let in_omega = r.within("anchor", "u", &u0, &omega, "box omega");
    let in_params = r.within("anchor", "lambda", &lambda0, &params, "parameter box");
    if !(in_omega && in_params) {
        return None;
    }
    match QuasiEqInstance::new(k?, f?, cone?, omega) {
        Ok(inst) => Some(Instance::QuasiEq {
            inst,
            u0,
            lambda0,
            which: which?,
        }),
        Err(e) => {
            r.err(0, e.to_string());
            None
        }
    }
}

fn options(r: &mut Reader, seed: u64) -> CertifyOptions {
    let d = CertifyOptions::default();
    let tol = match r.num("tolerances", "tol", false) {
        Some(t) if t < 0.0 => {
            let line = r.section_line("tolerances");
            r.err(line, "[tolerances] tol: must be nonnegative");
            None
        }
        t => t,
    };
    let eta = match r.num("tolerances", "eta", false) {
        Some(e) if e <= 0.0 => {
            let line = r.section_line("tolerances");
            r.err(line, "[tolerances] eta: must be positive");
            d.eta
        }
        e => e.unwrap_or(d.eta),
    };
    let max_witnesses = r
        .count("tolerances", "max_witnesses")
        .unwrap_or(d.max_witnesses);
    let depth = r.count("sequences", "depth").unwrap_or(d.spec.depth);
    let min_steps = r
        .count("sequences", "min_steps")
        .unwrap_or(d.spec.min_steps);
    if depth == 0 || min_steps > depth || max_witnesses == 0 {
        let line = r.section_line("sequences");
        r.err(
            line,
            "[sequences] need depth >= 1, min_steps <= depth and max_witnesses >= 1",
        );
    }
    CertifyOptions {
        spec: SequenceSpec {
            depth,
            random_directions: r
                .count("sequences", "random_directions")
                .unwrap_or(d.spec.random_directions),
            seed,
            min_steps,
        },
        max_witnesses,
        tol,
        eta,
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str, default_name: &str) -> Result<RunConfig, ConfigError> {
    let (doc, syntax) = ini::parse(text);
    let mut r = Reader {
        doc: &doc,
        errors: syntax,
    };
    let kind = match r.word("instance", "kind", true) {
        Some((line, k)) => match Kind::parse(&k) {
            Some(k) => Some(k),
            None => {
                r.err(
                    line,
                    format!("[instance] kind: unknown kind `{k}` (pfpp, stackelberg, quasieq)"),
                );
                None
            }
        },
        None => None,
    };
    let name = r
        .word("instance", "name", false)
        .map_or(default_name.to_string(), |(_, n)| n);
    let seed = match r.raw("instance", "seed", false) {
        Some((line, v)) => v.parse::<u64>().unwrap_or_else(|_| {
            r.err(
                line,
                format!("[instance] seed: `{v}` is not a nonnegative integer"),
            );
            DEFAULT_SEED
        }),
        None => DEFAULT_SEED,
    };
    let Some(kind) = kind else {
        return Err(ConfigError::Invalid(sorted(r.errors)));
    };
    check_keys(&mut r, kind);
    let opts = options(&mut r, seed);
    let output_dir = r
        .word("output", "dir", false)
        .map(|(_, d)| PathBuf::from(d));
    let mut expect = BTreeMap::new();
    for cmd in SUBCOMMANDS {
        if let Some((line, v)) = r.word("expect", cmd, false) {
            match Verdict::parse(&v) {
                Some(verdict) => {
                    expect.insert(cmd.to_string(), verdict);
                }
                None => r.err(line, format!("[expect] {cmd}: unknown verdict `{v}`")),
            }
        }
    }
    let instance = match kind {
        Kind::Pfpp => pfpp(&mut r),
        Kind::Stackelberg => stackelberg(&mut r),
        Kind::QuasiEq => quasieq(&mut r),
    };
    match instance {
        Some(instance) if r.errors.is_empty() => Ok(RunConfig {
            name,
            seed,
            instance,
            opts,
            output_dir,
            expect,
        }),
        _ => {
            if r.errors.is_empty() {
                r.err(0, "invalid configuration");
            }
            Err(ConfigError::Invalid(sorted(r.errors)))
        }
    }
}

fn sorted(mut v: Vec<Positioned>) -> Vec<Positioned> {
    v.sort();
    v.dedup();
    v
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance");
    parse_config(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[instance]
kind = pfpp
[domain]
lo = 0
hi = 2
h = 0.01
[params]
lo = -1
hi = 1
[map]
family = box
lo = "0.5*x1"
hi = "1 + 0*l1"
[anchor]
lambda = 0
"#;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text, "t") {
            Err(e) => e.messages(),
            Ok(_) => Vec::new(),
        }
    }

    #[test]
    fn base_loads_with_defaults() {
        let c = parse_config(BASE, "t").unwrap();
        assert_eq!(c.name, "t");
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.opts.spec.seed, DEFAULT_SEED);
        assert!(matches!(c.instance, Instance::Pfpp { epsilon0: None, .. }));
    }

    #[test]
    fn zero_resolution_is_rejected() {
        let e = errors(&BASE.replace("h = 0.01", "h = 0"));
        assert!(
            e.iter().any(|m| m.contains("resolution must be positive")),
            "{e:?}"
        );
    }

    #[test]
    fn undeclared_variable_is_named() {
        let e = errors(&BASE.replace("\"1 + 0*l1\"", "\"1 + u3\""));
        assert!(
            e.iter()
                .any(|m| m.contains("u3") && m.starts_with("line 14")),
            "{e:?}"
        );
    }

    #[test]
    fn every_error_is_reported() {
        let text = BASE
            .replace("h = 0.01", "h = -1")
            .replace("\"0.5*x1\"", "\"0.5*(x1\"")
            .replace("lambda = 0", "lambda = 0\nbogus = 1");
        let e = errors(&text);
        assert!(e.iter().any(|m| m.contains("resolution")));
        assert!(e.iter().any(|m| m.contains("syntax error")), "{e:?}");
        assert!(e.iter().any(|m| m.contains("unknown key `bogus`")));
    }

    #[test]
    fn empty_box_and_bad_anchor() {
        let e = errors(&BASE.replace("lo = -1", "lo = 2"));
        assert!(e.iter().any(|m| m.contains("empty box")), "{e:?}");
        let e = errors(&BASE.replace("lambda = 0", "lambda = 5"));
        assert!(e.iter().any(|m| m.contains("outside")), "{e:?}");
    }

    #[test]
    fn family_specific_keys_are_strict() {
        let e = errors(&BASE.replace("family = box", "family = singleton"));
        assert!(e.iter().any(|m| m.contains("unknown key `lo`")), "{e:?}");
        assert!(
            e.iter().any(|m| m.contains("missing required key `value`")),
            "{e:?}"
        );
    }

    #[test]
    fn indexed_names() {
        assert!(indexed("x1", "x", 2) && indexed("x2", "x", 2));
        assert!(
            !indexed("x3", "x", 2)
                && !indexed("x0", "x", 2)
                && !indexed("x01", "x", 2)
                && !indexed("x", "x", 2)
        );
    }
}
