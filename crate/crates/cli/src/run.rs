//! Subcommand execution. Every command produces its files in memory; the
//! caller decides where they go.

use std::collections::BTreeMap;
use std::path::Path;

use svfix::certifier::{
    approx_map_sequences, audit_approx_lsc, audit_solution_lsc, certify_approx_lsc,
    certify_solution_lsc, solution_sequences, CertifyOptions, LscRun,
};
use svfix::fixpoint::{approx_solution_set, existence_report, q_family, SolutionSet};
use svfix::mapping::{SetValuedMap, SetValuedMapDef};
use svfix::quasieq::{
    audit_m_lsc, certify_m_lsc, h_set, m_sequences, m_set_of, QuasiEqInstance, Which,
};
use svfix::stackelberg::{
    response_lsc_certify, response_sequences, response_set, responses, solve_from, Mode,
    StackelbergInstance, StackelbergSolution,
};
use svfix::{HypothesisAudit, Verdict};

use crate::config::{ConfigError, Instance, Kind, RunConfig};
use crate::output::{certificate_csv, step_sets_csv, witnesses_csv, Report};

const Q_FAMILY_SIZE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Certify,
    Audit,
    Stackelberg,
    QuasiEq,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Audit => "audit",
            Command::Stackelberg => "stackelberg",
            Command::QuasiEq => "quasieq",
        }
    }

    /// The commands that make sense for an instance kind, in corpus order.
    pub fn for_kind(kind: Kind) -> &'static [Command] {
        match kind {
            Kind::Pfpp => &[Command::Solve, Command::Certify, Command::Audit],
            Kind::Stackelberg => &[
                Command::Solve,
                Command::Stackelberg,
                Command::Certify,
                Command::Audit,
            ],
            Kind::QuasiEq => &[
                Command::Solve,
                Command::QuasiEq,
                Command::Certify,
                Command::Audit,
            ],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn compute<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, RunError> {
    r.map_err(|e| RunError::Compute(e.to_string()))
}

/// Files keyed by name, the report, and the overall verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub files: BTreeMap<String, String>,
}

impl Outcome {
    pub fn write_to(&self, dir: &Path) -> Result<(), RunError> {
        let io = |path: &Path, source| RunError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| io(&p, e))?;
        }
        Ok(())
    }

    pub fn report(&self) -> Option<&str> {
        self.files.get("report.txt").map(String::as_str)
    }
}

/// Accumulates files, report lines and verdicts for one command.
struct Sink {
    files: BTreeMap<String, String>,
    report: Report,
    details: Report,
    verdicts: Vec<Verdict>,
}

impl Sink {
    fn new(cfg: &RunConfig, cmd: Command) -> Self {
        let mut report = Report::default();
        report.set("instance", &cfg.name);
        report.set("kind", cfg.instance.kind().as_str());
        report.set("command", cmd.as_str());
        report.set("seed", cfg.seed);
        Self {
            files: BTreeMap::new(),
            report,
            details: Report::default(),
            verdicts: Vec::new(),
        }
    }

    fn file(&mut self, name: &str, body: String) {
        self.files.insert(name.to_string(), body);
    }

    fn audit(&mut self, a: &HypothesisAudit) {
        self.report.audit(a);
        self.details.audit_details(a);
    }

    fn run(&mut self, prefix: &str, key: &str, run: &LscRun, dim: usize) {
        let c = &run.certificate;
        self.file(&format!("{prefix}_certificate.csv"), certificate_csv(c));
        self.file(&format!("{prefix}_witnesses.csv"), witnesses_csv(c));
        self.file(&format!("{prefix}_steps.csv"), step_sets_csv(run, dim));
        self.file(&format!("{prefix}_base.csv"), run.base.to_csv(dim));
        self.report.certificate(key, c);
        self.verdicts.push(c.verdict);
    }

    fn finish(mut self) -> Outcome {
        let verdict = Verdict::all(self.verdicts.iter().copied());
        self.report.set("verdict", verdict);
        self.files.insert("report.txt".into(), self.report.render());
        if !self.details.lines.is_empty() {
            self.files
                .insert("details.txt".into(), self.details.render());
        }
        Outcome {
            verdict,
            files: self.files,
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn set_summary(sink: &mut Sink, key: &str, s: &SolutionSet) {
    sink.report.set(format!("{key}.size"), s.len());
    if let Some((lo, hi)) = s.bounds() {
        sink.report.set(format!("{key}.lo"), fmt_vec(&lo));
        sink.report.set(format!("{key}.hi"), fmt_vec(&hi));
    }
}

pub fn execute(cfg: &RunConfig, cmd: Command) -> Result<Outcome, RunError> {
    if !Command::for_kind(cfg.instance.kind()).contains(&cmd) {
        return Err(RunError::Usage(format!(
            "`{}` does not apply to {} instance `{}`",
            cmd.as_str(),
            cfg.instance.kind().as_str(),
            cfg.name
        )));
    }
    let mut sink = Sink::new(cfg, cmd);
    let opts = &cfg.opts;
    match &cfg.instance {
        Instance::Pfpp {
            map,
            lambda0,
            epsilon0,
        } => match cmd {
            Command::Solve => pfpp_solve(&mut sink, map, lambda0, *epsilon0, opts)?,
            Command::Certify => pfpp_certify(&mut sink, map, lambda0, *epsilon0, opts)?,
            _ => pfpp_audit(&mut sink, map, lambda0, *epsilon0, opts),
        },
        Instance::Stackelberg {
            inst,
            x0,
            selection,
        } => {
            if matches!(cmd, Command::Solve | Command::Stackelberg) {
                sb_solve(&mut sink, inst, x0, selection, opts)?;
            }
            if matches!(cmd, Command::Stackelberg | Command::Certify) {
                let seqs = response_sequences(inst, x0, &opts.spec);
                let run = compute(response_lsc_certify(inst, x0, &seqs, opts))?;
                sink.run("response", "response_lsc", &run, inst.follower().arg_dim());
            }
            if matches!(cmd, Command::Certify | Command::Audit) {
                let a = audit_solution_lsc(inst.follower(), x0, opts);
                sink.audit(&a);
                if cmd == Command::Audit {
                    sink.verdicts.push(a.verdict());
                }
            }
        }
        Instance::QuasiEq {
            inst,
            u0,
            lambda0,
            which,
        } => {
            if matches!(cmd, Command::Solve | Command::QuasiEq) {
                qe_solve(&mut sink, inst, u0, lambda0, opts)?;
            }
            if matches!(cmd, Command::QuasiEq | Command::Certify) {
                for &w in which {
                    let seqs = m_sequences(inst, u0, lambda0, &opts.spec);
                    let run = compute(certify_m_lsc(inst, w, u0, lambda0, &seqs, opts))?;
                    sink.run(
                        w.as_str(),
                        &format!("{}_lsc", w.as_str()),
                        &run,
                        inst.domain().dim(),
                    );
                }
            }
            if matches!(cmd, Command::Certify | Command::Audit) {
                for &w in which {
                    let a = compute(audit_m_lsc(inst, w, u0, lambda0, opts))?;
                    sink.audit(&a.audit);
                    let name = &a.audit.name;
                    sink.report.set(
                        format!("{name}.route_semicontinuity"),
                        a.semicontinuity_route,
                    );
                    sink.report
                        .set(format!("{name}.route_inclusion"), a.inclusion_route);
                    if cmd == Command::Audit {
                        sink.verdicts
                            .push(a.semicontinuity_route.min(a.inclusion_route));
                    }
                }
            }
        }
    }
    Ok(sink.finish())
}

fn pfpp_solve(
    sink: &mut Sink,
    map: &SetValuedMapDef,
    lambda0: &[f64],
    epsilon0: Option<f64>,
    opts: &CertifyOptions,
) -> Result<(), RunError> {
    let (n, tol, h) = (map.arg_dim(), opts.tol_for(map), map.domain().h());
    sink.report.set("lambda", fmt_vec(lambda0));
    sink.report.set("h", h);
    sink.report.set("tol", tol);
    let ex = compute(existence_report(map, lambda0, tol, &opts.spec))?;
    sink.audit(&ex.audit);
    sink.verdicts.push(ex.verdict());
    set_summary(sink, "solution", &ex.solution);
    sink.file("solution.csv", ex.solution.to_csv(n));
    let eps_max = match epsilon0 {
        Some(e) if e > 0.0 => {
            let approx = compute(approx_solution_set(map, lambda0, e, tol))?;
            sink.report.set("epsilon", e);
            set_summary(sink, "approx", &approx);
            sink.file("approx.csv", approx.to_csv(n));
            2.0 * e
        }
        _ => 20.0 * h,
    };
    let eps: Vec<f64> = (0..Q_FAMILY_SIZE)
        .map(|i| eps_max * i as f64 / (Q_FAMILY_SIZE - 1) as f64)
        .collect();
    // q_family rejects a family that is not nested
    let fam = q_family(map, lambda0, &eps, tol);
    sink.report.set(
        "q_family.nested",
        if fam.is_ok() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    );
    let fam = compute(fam)?;
    let mut csv = String::from("epsilon,size\n");
    for (e, s) in eps.iter().zip(&fam) {
        csv += &format!("{e},{}\n", s.len());
    }
    sink.file("q_family.csv", csv);
    Ok(())
}

fn pfpp_certify(
    sink: &mut Sink,
    map: &SetValuedMapDef,
    lambda0: &[f64],
    epsilon0: Option<f64>,
    opts: &CertifyOptions,
) -> Result<(), RunError> {
    let n = map.arg_dim();
    let seqs = solution_sequences(map, lambda0, &opts.spec);
    let run = compute(certify_solution_lsc(map, lambda0, &seqs, opts))?;
    sink.run("s", "solution_lsc", &run, n);
    sink.audit(&audit_solution_lsc(map, lambda0, opts));
    if let Some(e) = epsilon0 {
        let seqs = approx_map_sequences(map, lambda0, e, &opts.spec);
        let run = compute(certify_approx_lsc(map, lambda0, e, &seqs, opts))?;
        sink.run("e", "approx_lsc", &run, n);
        sink.audit(&audit_approx_lsc(map, lambda0, e, opts));
    }
    Ok(())
}

fn pfpp_audit(
    sink: &mut Sink,
    map: &SetValuedMapDef,
    lambda0: &[f64],
    epsilon0: Option<f64>,
    opts: &CertifyOptions,
) {
    let a = audit_solution_lsc(map, lambda0, opts);
    sink.audit(&a);
    sink.verdicts.push(a.verdict());
    if let Some(e) = epsilon0 {
        let a = audit_approx_lsc(map, lambda0, e, opts);
        sink.audit(&a);
        sink.verdicts.push(a.verdict());
    }
}

/// Pessimistic >= selection >= optimistic, overall and per leader point.
pub fn modes_ordered(
    o: &StackelbergSolution,
    s: &StackelbergSolution,
    p: &StackelbergSolution,
) -> bool {
    let rows = o.rows.iter().zip(&s.rows).zip(&p.rows).all(|((a, b), c)| {
        match (a.inner_value, b.inner_value, c.inner_value) {
            (Some(a), Some(b), Some(c)) => a <= b && b <= c,
            (None, None, None) => true,
            _ => false,
        }
    });
    rows && o.value <= s.value && s.value <= p.value
}

fn sb_solve(
    sink: &mut Sink,
    inst: &StackelbergInstance,
    x0: &[f64],
    selection: &[f64],
    opts: &CertifyOptions,
) -> Result<(), RunError> {
    let (n1, n2) = (inst.leader().dim(), inst.follower().arg_dim());
    let tol = opts.tol_for(inst.follower());
    sink.report.set("tol", tol);
    let r = compute(responses(inst, tol))?;
    let mut sols = Vec::new();
    for mode in Mode::ALL {
        let sol = compute(solve_from(inst, &r, mode, selection))?;
        let m = mode.as_str();
        sink.file(&format!("table_{m}.csv"), sol.to_csv(n1, n2));
        sink.report.set(format!("{m}.x_star"), fmt_vec(&sol.x_star));
        sink.report.set(format!("{m}.y_star"), fmt_vec(&sol.y_star));
        sink.report.set(format!("{m}.value"), sol.value);
        sink.report.set(format!("{m}.excluded"), sol.warnings.len());
        if let Some(k) = sol.modulus {
            sink.report.set(format!("{m}.modulus"), k);
        }
        sols.push((mode, sol));
    }
    let get = |m: Mode| &sols.iter().find(|(k, _)| *k == m).unwrap().1;
    let ordered = modes_ordered(
        get(Mode::Optimistic),
        get(Mode::Selection),
        get(Mode::Pessimistic),
    );
    let v = if ordered {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    sink.report.set("mode_ordering", v);
    sink.verdicts.push(v);
    let rx = compute(response_set(inst, x0, tol))?;
    set_summary(sink, "response_x0", &rx);
    sink.file("response_x0.csv", rx.to_csv(n2));
    Ok(())
}

fn qe_solve(
    sink: &mut Sink,
    inst: &QuasiEqInstance,
    u0: &[f64],
    lambda0: &[f64],
    opts: &CertifyOptions,
) -> Result<(), RunError> {
    let n = inst.domain().dim();
    let tol = opts.tol_for(inst.k());
    sink.report.set("tol", tol);
    let h = compute(h_set(inst, lambda0, tol))?;
    let m1 = compute(m_set_of(inst, Which::M1, u0, lambda0, tol))?;
    let m2 = compute(m_set_of(inst, Which::M2, u0, lambda0, tol))?;
    for (key, s) in [("h", &h), ("m1", &m1), ("m2", &m2)] {
        set_summary(sink, key, s);
        sink.file(&format!("{key}.csv"), s.to_csv(n));
    }
    let nested = m2.is_subset_of(&m1) && m1.is_subset_of(&h);
    let v = if nested { Verdict::Pass } else { Verdict::Fail };
    sink.report.set("m_nesting", v);
    sink.verdicts.push(v);
    Ok(())
}
